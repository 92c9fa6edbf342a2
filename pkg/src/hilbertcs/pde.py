r"""Parameterized 1D diffusion problem and its finite-difference solver.

Solves :math:`-(a(x, t) u'(x, t))' = 1` on :math:`(0, 1)` with
:math:`u(0) = u(1) = 0` for parameters :math:`t \in (-\sqrt3, \sqrt3)^d`,
where

.. math::
    a(x, t) = 10 + t_1 \Big(\frac{\sqrt\pi L}{2}\Big)^{1/2}
              + \sum_{i=2}^d \zeta_i \vartheta_i(x) t_i,
    \qquad
    \zeta_i = (\sqrt\pi L)^{1/2}
              \exp\Big(-\frac{(\lfloor i/2 \rfloor \pi L)^2}{8}\Big),

with :math:`\vartheta_i(x) = \sin(\lfloor i/2\rfloor \pi x / L_p)` for even
``i`` and the cosine for odd ``i``. The log-transformed variant uses
:math:`\log(a(x, t) - 0.5)` as the diffusion coefficient.

The grid has ``K`` interior nodes with spacing ``h = 1/(K+1)``; the
coefficient is sampled at half nodes (conservative three-point scheme).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .hilbert import InnerProduct

__all__ = [
    "SQRT3",
    "NumericalError",
    "DiffusionCoefficient",
    "PdeProblem",
    "eval_coefficient",
    "solve_pde",
    "solve_many",
    "h1_gram",
    "interpolate_nodal",
    "export_csv",
]

SQRT3 = math.sqrt(3.0)
BASELINE = 10.0
LOG_SHIFT = 0.5
_PARAM_TOL = 1e-12


class NumericalError(ArithmeticError):
    """Non-physical coefficient values or a failed linear solve."""


@dataclass(frozen=True)
class DiffusionCoefficient:
    """Transcendental random-field coefficient on ``[0, 1]``.

    Parameters
    ----------
    d : int
        Number of random parameters.
    Lc : float
        Correlation length.
    variant : {"affine", "log"}
    Lp, L : float, optional
        Derived lengths; default ``Lp = max(1, 2 Lc)`` and ``L = Lc / Lp``.
    scale : float
        Multiplies every parameter amplitude; ``0`` gives a deterministic
        coefficient.
    """

    d: int
    Lc: float = 0.5
    variant: str = "affine"
    Lp: float | None = None
    L: float | None = None
    scale: float = 1.0
    zeta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not self.Lc > 0:
            raise ValueError("correlation length must be positive")
        if self.variant not in ("affine", "log"):
            raise ValueError(f"unknown coefficient variant {self.variant!r}")
        if self.Lp is None:
            object.__setattr__(self, "Lp", max(1.0, 2.0 * self.Lc))
        if self.L is None:
            object.__setattr__(self, "L", self.Lc / self.Lp)
        i = np.arange(1, self.d + 1)
        zeta = math.sqrt(math.sqrt(math.pi) * self.L) * np.exp(
            -((i // 2) * math.pi * self.L) ** 2 / 8.0)
        zeta[0] = math.sqrt(math.sqrt(math.pi) * self.L / 2.0)
        object.__setattr__(self, "zeta", self.scale * zeta)
        if self.lower_bound() <= (LOG_SHIFT + 1.0 if self.variant == "log" else 0.0):
            raise NumericalError(
                f"coefficient positivity cannot be certified for d={self.d}, "
                f"Lc={self.Lc}, variant={self.variant}")

    def lower_bound(self) -> float:
        """Lower bound of the affine field ``a`` over the parameter cube."""
        return BASELINE - SQRT3 * float(np.abs(self.zeta).sum())

    def modes(self, x) -> np.ndarray:
        """``(d, len(x))`` array of the parameter multipliers at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((self.d, x.size))
        out[0] = self.zeta[0]
        for i in range(2, self.d + 1):
            arg = (i // 2) * math.pi * x / self.Lp
            out[i - 1] = self.zeta[i - 1] * (np.sin(arg) if i % 2 == 0 else np.cos(arg))
        return out

    def to_dict(self) -> dict:
        return {"d": self.d, "Lc": self.Lc, "variant": self.variant,
                "Lp": self.Lp, "L": self.L, "scale": self.scale}


def _check_params(t, d: int) -> np.ndarray:
    t = np.atleast_2d(np.asarray(t, dtype=float))
    if t.shape[1] != d:
        raise ValueError(f"parameter points have dimension {t.shape[1]}, expected {d}")
    if not np.all(np.abs(t) <= SQRT3 * (1.0 + _PARAM_TOL)):
        raise ValueError("parameters must lie in (-sqrt(3), sqrt(3))")
    return np.clip(t, -SQRT3, SQRT3)


def eval_coefficient(coef: DiffusionCoefficient, x, t) -> np.ndarray:
    """Coefficient values at points ``x`` for parameter point(s) ``t``.

    ``t`` of shape ``(d,)`` gives an array shaped like ``x``; ``t`` of
    shape ``(m, d)`` gives ``(m, len(x))``.

    Raises
    ------
    NumericalError
        If any value is not strictly positive.
    """
    single = np.ndim(t) == 1
    tt = _check_params(t, coef.d)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    modes = coef.modes(xs)
    # Fixed-order accumulation keeps each row independent of the batch size.
    a = np.full((tt.shape[0], xs.size), BASELINE)
    for i in range(coef.d):
        a += tt[:, i, None] * modes[i]
    if coef.variant == "log":
        shifted = a - LOG_SHIFT
        if np.any(shifted <= 0):
            raise NumericalError("log-transformed coefficient undefined")
        a = np.log(shifted)
    if np.any(a <= 0):
        i, j = np.unravel_index(np.argmin(a), a.shape)
        raise NumericalError(
            f"non-positive coefficient {a[i, j]:.3g} at x={xs[j]:.6g}, t={tt[i].tolist()}")
    if single:
        a = a[0]
        return float(a[0]) if np.ndim(x) == 0 else a
    return a


def h1_gram(K: int) -> np.ndarray:
    """Discrete ``H^1_0`` Gram matrix ``(1/h) tridiag(-1, 2, -1)``, ``h = 1/(K+1)``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    h = 1.0 / (K + 1)
    m = np.diag(np.full(K, 2.0 / h))
    off = np.full(K - 1, -1.0 / h)
    return m + np.diag(off, 1) + np.diag(off, -1)


class PdeProblem:
    """Diffusion problem on ``K`` interior nodes with unit forcing.

    Attributes
    ----------
    nodes : ndarray
        Interior node positions ``k h``.
    half_nodes : ndarray
        ``K + 1`` cell midpoints ``(k - 1/2) h``.
    gram_h1 : ndarray
        Discrete ``H^1_0`` Gram matrix.
    """

    forcing = 1.0

    def __init__(self, K: int, coefficient: DiffusionCoefficient):
        if K < 1:
            raise ValueError("K must be >= 1")
        self.K = int(K)
        self.h = 1.0 / (K + 1)
        self.coefficient = coefficient
        self.nodes = self.h * np.arange(1, K + 1)
        self.half_nodes = self.h * (np.arange(1, K + 2) - 0.5)
        self.gram_h1 = h1_gram(K)
        self._ip = None

    @property
    def inner_product(self) -> InnerProduct:
        if self._ip is None:
            self._ip = InnerProduct(self.K, self.gram_h1)
        return self._ip

    def h1_norm(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return math.sqrt(max(float(v @ self.gram_h1 @ v), 0.0))

    def l2_norm(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return math.sqrt(self.h * float(v @ v))


def _tridiag_solve(a_half: np.ndarray, h: float, rhs: float) -> np.ndarray:
    k = a_half.size - 1
    ab = np.zeros((2, k))
    ab[1] = (a_half[:-1] + a_half[1:]) / h ** 2
    ab[0, 1:] = -a_half[1:-1] / h ** 2
    try:
        return scipy.linalg.solveh_banded(ab, np.full(k, rhs), lower=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"tridiagonal solve failed: {exc}") from exc


def solve_pde(problem: PdeProblem, t) -> np.ndarray:
    """Interior nodal values of the solution for one parameter point ``t``."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1:
        raise ValueError("solve_pde takes a single parameter point")
    a = eval_coefficient(problem.coefficient, problem.half_nodes, t)
    return _tridiag_solve(np.asarray(a), problem.h, problem.forcing)


def solve_many(problem: PdeProblem, points) -> np.ndarray:
    """Solutions for parameter points of shape ``(m, d)``, one row each."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = eval_coefficient(problem.coefficient, problem.half_nodes, pts)
    out = np.empty((pts.shape[0], problem.K))
    for i in range(pts.shape[0]):
        out[i] = _tridiag_solve(a[i], problem.h, problem.forcing)
    return out


def interpolate_nodal(values, K_to: int) -> np.ndarray:
    """Piecewise-linear interpolation of interior nodal values onto a grid with ``K_to`` nodes."""
    values = np.asarray(values, dtype=float)
    k = values.shape[-1]
    xs = np.linspace(0.0, 1.0, k + 2)
    xt = np.arange(1, K_to + 1) / (K_to + 1)
    padded = np.concatenate([[0.0], values, [0.0]])
    return np.interp(xt, xs, padded)


def export_csv(path, nodes, values) -> None:
    """Write ``node,value`` rows."""
    try:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["node", "value"])
            for x, v in zip(nodes, values):
                writer.writerow([repr(float(x)), repr(float(v))])
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
