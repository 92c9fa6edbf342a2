"""Restricted isometry and null space checks on small matrices."""
import numpy as np
from scipy.linalg import hadamard

from hilbertcs import (InnerProduct, nsp_grid_scan, rip_constant_exact,
                       rip_implied_nsp_constants, sample_complexity_bound, total_degree_set)

# identity plus four normalized Hadamard columns: coherence 1/4
h = hadamard(16) / 4.0
a = np.hstack([np.eye(16), h[:, :4]])
s = 1
for k in (1, 2):
    est = rip_constant_exact(a, k)
    print(f"delta_{k} = {est.delta_s:.4f}")
delta = rip_constant_exact(a, 2 * s).delta_s
rho, tau = rip_implied_nsp_constants(delta)
print(f"implied NSP constants rho={rho:.3f}, tau={tau:.3f}")

scan = nsp_grid_scan(a, s, [0.5, 0.9], [2.0, 5.0], trials=2000, ip=InnerProduct(3), K=3, seed=1)
for w in scan:
    print(f"rho={w.rho}, tau={w.tau_nsp}: worst margin {w.margin:.3e}, violated={w.violated}")

lam = total_degree_set(8, 2)
print("sufficient m for TD(8,2), s=10, C=1:", sample_complexity_bound(lam, 10, 1.0))
