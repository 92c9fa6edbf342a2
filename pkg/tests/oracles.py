"""Independent reference implementations used to check the package.

None of these import the code paths they check.
"""
import itertools
import math

import numpy as np
from numpy.polynomial import legendre as npleg


def td_indices_bruteforce(d, p):
    """All multi-indices with |nu|_1 <= p, from a full grid filter."""
    return sorted((nu for nu in itertools.product(range(p + 1), repeat=d) if sum(nu) <= p),
                  key=lambda nu: (sum(nu), nu))


def legendre_orthonormal(n, t):
    """sqrt(2n+1) P_n(t) through numpy's Legendre series."""
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    return math.sqrt(2 * n + 1) * npleg.legval(t, coef)


def tensor_value(nu, y):
    return np.prod([legendre_orthonormal(n, y[..., i]) for i, n in enumerate(nu)], axis=0)


def bcd_group_lasso(a, u, mu, sweeps=20000, tol=1e-15, x0=None):
    """Cyclic block coordinate descent for sum_j ||x_j|| + mu/2 ||A x - u||_F^2.

    Each row update is the exact minimizer over that row with the others
    fixed, so this shares no code or step-size logic with proximal gradient.
    """
    m, n = a.shape
    x = np.zeros((n, u.shape[1])) if x0 is None else np.array(x0, dtype=float)
    r = u - a @ x
    col_sq = (a * a).sum(axis=0)
    for _ in range(sweeps):
        biggest = 0.0
        for j in range(n):
            if col_sq[j] == 0:
                continue
            old = x[j].copy()
            z = a[:, j] @ r + col_sq[j] * old
            nz = np.linalg.norm(z)
            new = np.zeros_like(old) if nz <= 1.0 / mu else (1 - 1.0 / (mu * nz)) * z / col_sq[j]
            if np.any(new != old):
                r -= np.outer(a[:, j], new - old)
                x[j] = new
                biggest = max(biggest, np.linalg.norm(new - old))
        if biggest <= tol * max(1.0, np.linalg.norm(x)):
            break
    return x


def bcd_continuation(a, u, mu, start, factor=10.0, **kw):
    """Warm-started coordinate descent along ``start * factor**k`` up to ``mu``."""
    x = None
    m_k = start
    while True:
        m_k = min(m_k, mu)
        x = bcd_group_lasso(a, u, m_k, x0=x, **kw)
        if m_k == mu:
            return x
        m_k *= factor


def group_lasso_objective(x, a, u, mu):
    res = a @ x - u
    return np.linalg.norm(x, axis=1).sum() + 0.5 * mu * (res * res).sum()


def rip_loop(a, s):
    """delta_s by looping supports and taking the eigenvalues of each Gram."""
    n = a.shape[1]
    worst = 0.0
    for supp in itertools.combinations(range(n), s):
        sub = a[:, supp]
        ev = np.linalg.eigvalsh(sub.T @ sub)
        worst = max(worst, abs(ev[0] - 1.0), abs(ev[-1] - 1.0))
    return worst


def fd_dense_solve(a_half, h):
    """Assemble the conservative three-point matrix densely and solve with ones."""
    k = a_half.size - 1
    mat = np.zeros((k, k))
    for i in range(k):
        mat[i, i] = (a_half[i] + a_half[i + 1]) / h ** 2
        if i > 0:
            mat[i, i - 1] = -a_half[i] / h ** 2
        if i < k - 1:
            mat[i, i + 1] = -a_half[i + 1] / h ** 2
    return np.linalg.solve(mat, np.ones(k))


def sample_bound_direct(theta, n, s, C):
    """The sufficient sample count written literally, without rearranging logs."""
    t = theta ** 2 * s
    a = math.log(t) ** 2 * math.log(n)
    b = math.log(t) * math.log(math.log(t) * n ** math.log(s))
    return math.ceil(C * t * max(a, b))
