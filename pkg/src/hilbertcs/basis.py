r"""Tensor-product Legendre polynomials orthonormal under the uniform measure.

The univariate polynomials satisfy

.. math::
    \int_{-1}^{1} \hat P_n(t) \hat P_k(t) \, \frac{dt}{2} = \delta_{nk},
    \qquad \hat P_n = \sqrt{2n + 1} \, P_n,

and the multivariate system is :math:`\Psi_\nu(y) = \prod_i \hat P_{\nu_i}(y_i)`
on :math:`[-1, 1]^d`. Its sup-norm is attained at the corners,
:math:`\|\Psi_\nu\|_\infty = \prod_i \sqrt{2\nu_i + 1}`.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .multiindex import IndexSet

__all__ = [
    "CLAMP_TOL",
    "eval_1d",
    "legendre_table",
    "eval_tensor",
    "design_matrix",
    "uniform_bound",
    "sup_norm",
]

CLAMP_TOL = 1e-12


def _clamp(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + CLAMP_TOL) or not np.all(np.isfinite(t)):
        raise ValueError("evaluation points must lie in [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def legendre_table(nmax: int, t) -> np.ndarray:
    """Orthonormal Legendre values of degrees ``0..nmax``.

    Parameters
    ----------
    nmax : int
        Highest degree.
    t : array_like
        Points in ``[-1, 1]``; points outside by at most ``CLAMP_TOL``
        are clamped.

    Returns
    -------
    ndarray
        Shape ``t.shape + (nmax + 1,)``.
    """
    if nmax < 0:
        raise ValueError("degree must be nonnegative")
    t = _clamp(t)
    out = np.empty(t.shape + (nmax + 1,))
    out[..., 0] = 1.0
    if nmax >= 1:
        out[..., 1] = t
    # Bonnet recurrence on the standard (unnormalized) polynomials.
    for n in range(1, nmax):
        out[..., n + 1] = ((2 * n + 1) * t * out[..., n] - n * out[..., n - 1]) / (n + 1)
    out *= np.sqrt(2.0 * np.arange(nmax + 1) + 1.0)
    return out


def eval_1d(n: int, t):
    """Orthonormal Legendre polynomial of degree ``n`` at ``t``."""
    vals = legendre_table(n, t)[..., n]
    return float(vals) if np.ndim(vals) == 0 else vals


def eval_tensor(nu: Sequence[int], y) -> float:
    """Evaluate ``Psi_nu`` at a single point ``y`` of ``[-1, 1]^d``."""
    nu = np.asarray(nu, dtype=np.int64)
    y = np.asarray(y, dtype=float)
    if nu.ndim != 1 or y.shape != nu.shape:
        raise ValueError(f"dimension mismatch: nu has {nu.size} entries, y has {y.size}")
    if not nu.any():
        _clamp(y)
        return 1.0
    val = 1.0
    for n, t in zip(nu, y):
        if n:
            val *= eval_1d(int(n), t)
    return float(val)


def design_matrix(index_set: IndexSet, points) -> np.ndarray:
    """Matrix ``(Psi_nu(y_i))`` with rows indexed by points, columns by ``index_set``.

    Parameters
    ----------
    index_set : IndexSet
    points : array_like, shape (m, d)

    Returns
    -------
    ndarray, shape (m, N)
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != index_set.dimension:
        raise ValueError(
            f"points have dimension {pts.shape[1]}, index set has {index_set.dimension}")
    nu = index_set.array
    m, d = pts.shape
    table = legendre_table(index_set.max_degree, pts)  # (m, d, pmax+1)
    psi = np.ones((m, len(index_set)))
    for i in range(d):
        col = nu[:, i]
        if col.any():
            psi *= table[:, i, col]
    return psi


def sup_norm(nu: Sequence[int]) -> float:
    """``max |Psi_nu|`` over the cube, attained at ``y = (1, ..., 1)``."""
    return float(np.prod(np.sqrt(2.0 * np.asarray(nu, dtype=float) + 1.0)))


def uniform_bound(index_set: IndexSet) -> float:
    """Uniform bound ``Theta = max_nu ||Psi_nu||_inf`` over the set."""
    if len(index_set) == 0:
        raise ValueError("uniform bound of an empty index set is undefined")
    return float(np.prod(np.sqrt(2.0 * index_set.array + 1.0), axis=1).max())
