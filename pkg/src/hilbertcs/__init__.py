"""Joint-sparse polynomial recovery of Hilbert-valued functions.

Coefficients of a polynomial chaos expansion with values in a Hilbert space
are recovered from few random samples by mixed-norm l1 regularization,
solved with forward-backward splitting.
"""

__version__ = "0.1.0"

from .multiindex import CapacityError, IndexSet, index_rank, total_degree_set
from .basis import design_matrix, eval_1d, eval_tensor, legendre_table, uniform_bound
from .hilbert import (HilbertVector, InnerProduct, load_csv, mixed_norm, row_support,
                      save_csv, v_norm)
from .operator import (ConvergenceError, Measurements, SamplingOperator, adjoint_apply,
                       apply, assemble, spectral_norm_sq)
from .solver import (SolverConfig, SolverReport, backward_step, critical_mu,
                     forward_step, kkt_residual, objective, solve, solve_constrained,
                     solve_continuation)
from .analysis import (NspWitness, RipEstimate, nsp_grid_scan, nsp_randomized_check,
                       rip_constant_exact, rip_implied_nsp_constants,
                       sample_complexity_bound)
from .pde import (DiffusionCoefficient, NumericalError, PdeProblem, eval_coefficient,
                  h1_gram, solve_many, solve_pde)
from .expansion import ExpansionModel, truncation_error

__all__ = [
    "CapacityError", "IndexSet", "index_rank", "total_degree_set",
    "design_matrix", "eval_1d", "eval_tensor", "legendre_table", "uniform_bound",
    "HilbertVector", "InnerProduct", "load_csv", "mixed_norm", "row_support",
    "save_csv", "v_norm",
    "ConvergenceError", "Measurements", "SamplingOperator", "adjoint_apply", "apply",
    "assemble", "spectral_norm_sq",
    "SolverConfig", "SolverReport", "backward_step", "critical_mu", "forward_step",
    "kkt_residual", "objective", "solve", "solve_constrained", "solve_continuation",
    "NspWitness", "RipEstimate", "nsp_grid_scan", "nsp_randomized_check",
    "rip_constant_exact", "rip_implied_nsp_constants", "sample_complexity_bound",
    "DiffusionCoefficient", "NumericalError", "PdeProblem", "eval_coefficient",
    "h1_gram", "solve_many", "solve_pde",
    "ExpansionModel", "truncation_error",
]
