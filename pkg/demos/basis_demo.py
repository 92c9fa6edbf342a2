"""Total-degree index sets and the orthonormal Legendre basis.

Builds TD(d, p), checks the tensor basis is orthonormal under the uniform
measure by Gauss-Legendre quadrature, and prints the uniform bound.
"""
import itertools

import numpy as np

from hilbertcs import design_matrix, total_degree_set, uniform_bound

d, p = 3, 3
lam = total_degree_set(d, p)
print(f"TD({d},{p}) has {len(lam)} indices, max degree {lam.max_degree}")
print("first few:", lam.array[:6].tolist())

# tensor Gauss rule on [-1, 1]^d with weights of the probability measure
nodes, weights = np.polynomial.legendre.leggauss(p + 1)
grid = np.array(list(itertools.product(nodes, repeat=d)))
w = np.prod(list(itertools.product(weights / 2, repeat=d)), axis=1)
phi = design_matrix(lam, grid)
gram = phi.T @ (w[:, None] * phi)
print("max |G - I| =", np.abs(gram - np.eye(len(lam))).max())
print("uniform bound Theta =", uniform_bound(lam))
