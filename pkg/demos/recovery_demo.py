"""Joint-sparse recovery of a vector-valued coefficient sequence.

A random row-sparse X in R^{N x K} is measured as U = A X with a random
Legendre design, then recovered by forward-backward splitting.
"""
import numpy as np

from hilbertcs import (HilbertVector, InnerProduct, Measurements, SolverConfig, assemble,
                       critical_mu, solve_continuation, total_degree_set)

rng = np.random.default_rng(3)
d, p, K, s, m = 4, 3, 20, 5, 40
lam = total_degree_set(d, p)
n = len(lam)
op = assemble(lam, rng.uniform(-1, 1, size=(m, d)))

x_true = np.zeros((n, K))
support = rng.choice(n, s, replace=False)
x_true[support] = rng.standard_normal((s, K))
ip = InnerProduct(K)
u = Measurements(op.matrix @ x_true, ip)

mu = 1e8 * critical_mu(op, u)
rep = solve_continuation(op, u, mu, SolverConfig(mu=mu, tol_kkt=1e-6))
x = rep.solution.data
print(f"N={n}, m={m}, s={s}, K={K}")
print(f"termination {rep.termination}, kkt {rep.kkt_residual:.2e}")
print("true support     ", sorted(support.tolist()))
print("recovered support", sorted(np.flatnonzero(np.linalg.norm(x, axis=1) > 1e-6).tolist()))
print("relative error", np.linalg.norm(x - x_true) / np.linalg.norm(x_true))
print(f"mixed l1 norm: true {HilbertVector(x_true, ip).norm(1):.6f}, "
      f"recovered {rep.solution.norm(1):.6f}")
