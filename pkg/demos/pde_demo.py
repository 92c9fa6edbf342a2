"""Parametric diffusion in 1D: one solve and a mesh refinement check."""
import numpy as np

from hilbertcs import DiffusionCoefficient, PdeProblem, solve_pde
from hilbertcs.pde import BASELINE

coef = DiffusionCoefficient(8, 0.5, "affine")
t = np.full(8, 0.9)
problem = PdeProblem(63, coef)
u = solve_pde(problem, t)
print(f"lower bound of a: {coef.lower_bound():.3f}")
print(f"max u = {u.max():.5f} at x = {problem.nodes[u.argmax()]:.3f}")
print(f"H1 norm = {problem.h1_norm(u):.5f}")

# constant coefficient a = BASELINE: nodal values of x(1-x)/(2a) are exact
flat = PdeProblem(31, DiffusionCoefficient(8, 0.5, "affine", scale=0.0))
x = flat.nodes
print("constant case max error", np.abs(solve_pde(flat, np.zeros(8)) - x * (1 - x) / (2 * BASELINE)).max())
