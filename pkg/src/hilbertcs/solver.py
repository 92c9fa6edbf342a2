r"""Forward-backward splitting for mixed-norm regularized recovery.

Minimizes

.. math::
    F(x) = \|x\|_{V,1} + \frac{\mu}{2} \|A x - u\|_{V,2}^2

over ``x`` in ``V^N`` with the iteration

.. math::
    x^{k+1} = J_\tau\big(x^k - \tau\mu A^*(A x^k - u)\big),

where ``J_tau`` shrinks the V-norm of every row by ``tau`` (row-wise soft
thresholding). Convergence needs ``0 < tau * mu < 2 / ||A^* A||``.

When ``V`` carries a non-identity Gram matrix ``M = L L^T`` the iteration
runs in the coordinates ``x L``, where the V-norm is Euclidean and the
thresholding step is the exact proximal map; results are mapped back.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg

from .hilbert import HilbertVector, InnerProduct, row_norms, save_csv
from .operator import (ConvergenceError, Measurements, SamplingOperator,
                       colwise_matmul, spectral_norm_sq)

__all__ = [
    "SolverConfig",
    "SolverReport",
    "forward_step",
    "backward_step",
    "objective",
    "kkt_residual",
    "solve",
    "solve_continuation",
    "solve_constrained",
    "critical_mu",
]


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of :func:`solve`.

    Attributes
    ----------
    mu : float
        Fidelity weight ``mu > 0``.
    step : float or None
        Threshold/step ``tau``. ``None`` selects ``tau * mu = 1 / lam`` with
        ``lam`` an upper estimate of ``||A^* A||``.
    tol_fixed_point : float
        Relative iterate-change threshold.
    tol_kkt : float
        Optimality-residual threshold. Both tests must pass to stop early.
    max_iter : int
    record_history : bool
        Keep objective and support traces.
    power_tol : float
        Relative tolerance of the power iteration behind the automatic step.
    """

    mu: float = 1.0
    step: float | None = None
    tol_fixed_point: float = 1e-10
    tol_kkt: float = 1e-8
    max_iter: int = 100_000
    record_history: bool = False
    power_tol: float = 1e-8

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        for name in ("tol_fixed_point", "tol_kkt", "power_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class SolverReport:
    """Result of a forward-backward solve.

    ``termination`` is ``"kkt"`` when both stopping tests passed,
    ``"fixed-point"`` when the iterate stopped changing in floating point
    without meeting the KKT tolerance, and ``"max-iter"`` otherwise.
    """

    solution: HilbertVector
    iterations: int
    kkt_residual: float
    termination: str
    mu: float
    step: float
    objective_trace: list[float] = field(default_factory=list)
    support_trace: list[frozenset[int]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.termination != "max-iter"

    def to_dict(self, solution_file: str | None = None) -> dict:
        return {
            "iterations": self.iterations,
            "termination": self.termination,
            "kkt_residual": self.kkt_residual,
            "mu": self.mu,
            "step": self.step,
            "objective_trace": [float(v) for v in self.objective_trace],
            "support_trace": [sorted(s) for s in self.support_trace],
            "solution": solution_file,
        }

    def save(self, path) -> Path:
        """Write the report as JSON; the solution goes to a sibling CSV."""
        path = Path(path)
        sol_path = path.with_name(path.stem + "_solution.csv")
        save_csv(self.solution, sol_path)
        path.write_text(json.dumps(self.to_dict(sol_path.name), indent=1) + "\n")
        return path


def _matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, SamplingOperator) else np.asarray(op, dtype=float)


def _measure_data(u) -> np.ndarray:
    return u.data if isinstance(u, Measurements) else np.atleast_2d(np.asarray(u, float))


def forward_step(x: HilbertVector, op, u, tau_eff: float) -> HilbertVector:
    """Gradient step ``x - tau_eff * A^*(A x - u)``."""
    a = _matrix(op)
    ud = _measure_data(u)
    if a.shape[1] != x.rows or a.shape[0] != ud.shape[0] or ud.shape[1] != x.shape[1]:
        raise ValueError("shapes of operator, iterate and measurements disagree")
    return HilbertVector(x.data - tau_eff * (a.T @ (a @ x.data - ud)), x.ip)


def _shrink(z: np.ndarray, tau: float) -> np.ndarray:
    # Row-wise soft thresholding in Euclidean coordinates.
    norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    keep = norms > tau
    factor = np.zeros_like(norms)
    factor[keep] = (norms[keep] - tau) / norms[keep]
    return z * factor[:, None]


def backward_step(x: HilbertVector, tau: float) -> HilbertVector:
    """Row-wise soft thresholding ``x_j / ||x_j||_V * max(||x_j||_V - tau, 0)``.

    Rows with ``||x_j||_V <= tau`` (including zero rows) map to exact zeros.
    """
    if not tau > 0:
        raise ValueError("threshold must be positive")
    norms = x.row_norms()
    keep = norms > tau
    factor = np.zeros_like(norms)
    factor[keep] = (norms[keep] - tau) / norms[keep]
    return HilbertVector(x.data * factor[:, None], x.ip)


def objective(x: HilbertVector, op, u, mu: float) -> float:
    """``||x||_{V,1} + mu/2 ||A x - u||_{V,2}^2``."""
    a = _matrix(op)
    res = a @ x.data - _measure_data(u)
    rn = row_norms(res, x.ip)
    return float(x.row_norms().sum() + 0.5 * mu * (rn @ rn))


def _kkt_from_grad(xw: np.ndarray, g: np.ndarray) -> float:
    xn = np.sqrt(np.einsum("ij,ij->i", xw, xw))
    nz = xn > 0
    worst = 0.0
    if nz.any():
        r = g[nz] + xw[nz] / xn[nz, None]
        worst = float(np.sqrt(np.einsum("ij,ij->i", r, r)).max())
    if (~nz).any():
        gz = np.sqrt(np.einsum("ij,ij->i", g[~nz], g[~nz]))
        worst = max(worst, float(np.maximum(gz - 1.0, 0.0).max()))
    return worst


def kkt_residual(x: HilbertVector, op, u, mu: float) -> float:
    """First-order optimality residual of ``F`` at ``x``.

    With ``g = mu A^*(A x - u)``, returns the largest of
    ``||g_j + x_j / ||x_j||_V||_V`` over nonzero rows and
    ``max(||g_j||_V - 1, 0)`` over zero rows. It vanishes exactly at
    minimizers.
    """
    a = _matrix(op)
    g = mu * (a.T @ (a @ x.data - _measure_data(u)))
    if x.ip.is_identity:
        return _kkt_from_grad(x.data, g)
    chol = x.ip.cholesky
    return _kkt_from_grad(x.data @ chol, g @ chol)


def critical_mu(op, u, ip: InnerProduct | None = None) -> float:
    """Largest ``mu`` for which ``x = 0`` minimizes ``F``: ``1 / max_j ||(A^* u)_j||_V``."""
    a = _matrix(op)
    atu = a.T @ _measure_data(u)
    top = float(row_norms(atu, ip).max())
    return math.inf if top == 0 else 1.0 / top


# --- driver ---------------------------------------------------------------

class _Problem:
    """Operator and data mapped to working (Euclidean) coordinates."""

    def __init__(self, op, u, ip: InnerProduct | None):
        a = _matrix(op)
        ud = _measure_data(u)
        if ip is None:
            ip = u.ip if isinstance(u, Measurements) else InnerProduct(ud.shape[1])
        if a.shape[0] != ud.shape[0]:
            raise ValueError(f"operator has {a.shape[0]} rows, measurements {ud.shape[0]}")
        if ud.shape[1] != ip.dim:
            raise ValueError("measurement width does not match the inner product")
        self.a = a
        self.ip = ip
        self.chol = None if ip.is_identity else ip.cholesky
        self.u = ud if self.chol is None else ud @ self.chol
        self.use_normal = a.shape[0] > a.shape[1]
        if self.use_normal:
            ata = op.normal_matrix() if isinstance(op, SamplingOperator) else a.T @ a
            self.ata = ata
            self.atu = colwise_matmul(a.T, self.u)
        self._lam = None

    @property
    def n(self) -> int:
        return self.a.shape[1]

    def to_work(self, x: HilbertVector) -> np.ndarray:
        if x.shape != (self.n, self.ip.dim):
            raise ValueError(f"initial guess has shape {x.shape}, expected {(self.n, self.ip.dim)}")
        return x.data.copy() if self.chol is None else x.data @ self.chol

    def from_work(self, xw: np.ndarray) -> HilbertVector:
        if self.chol is None:
            return HilbertVector(xw, self.ip)
        data = scipy.linalg.solve_triangular(self.chol.T, xw.T, lower=False).T
        return HilbertVector(data, self.ip)

    def grad(self, xw: np.ndarray) -> np.ndarray:
        # A^*(A x - u); column-wise products keep each V-coordinate independent.
        if self.use_normal:
            return colwise_matmul(self.ata, xw) - self.atu
        return colwise_matmul(self.a.T, colwise_matmul(self.a, xw) - self.u)

    def objective(self, xw: np.ndarray, mu: float) -> float:
        res = self.a @ xw - self.u
        return float(np.sqrt(np.einsum("ij,ij->i", xw, xw)).sum()
                     + 0.5 * mu * np.einsum("ij,ij->", res, res))

    def lipschitz(self, tol: float) -> float:
        """Upper estimate ``lam / (1 - tol)`` of ``||A^* A||``."""
        if self._lam is None:
            try:
                lam = spectral_norm_sq(self.a, tol=tol, max_iter=20_000)
            except ConvergenceError as exc:
                lam = exc.estimate
            self._lam = lam / (1.0 - tol)
        return self._lam

    def step(self, cfg: SolverConfig) -> float:
        """Effective gradient step ``tau * mu``."""
        if not np.any(self.a):
            return 1.0 if cfg.step is None else cfg.step * cfg.mu
        lam = self.lipschitz(cfg.power_tol)
        if cfg.step is None:
            return 1.0 / lam
        tau_eff = cfg.step * cfg.mu
        if tau_eff >= 2.0 / lam:
            raise ValueError(
                f"step * mu = {tau_eff:.6g} is not below 2/||A^*A|| = {2.0 / lam:.6g}")
        return tau_eff


_MAX_KKT_GAP = 32


def _iterate(prob: _Problem, xw: np.ndarray, mu: float, tau_eff: float,
             cfg: SolverConfig, callback=None) -> tuple:
    tau = tau_eff / mu
    obj_trace, supp_trace = [], []

    def log(x):
        obj_trace.append(prob.objective(x, mu))
        supp_trace.append(frozenset(np.flatnonzero(np.einsum("ij,ij->i", x, x) > 0).tolist()))

    if cfg.record_history:
        log(xw)
    grad = prob.grad(xw)
    termination = "max-iter"
    kkt = None
    it = 0
    # Once the fixed-point test passes, KKT is re-checked at growing gaps.
    gap, next_check = 1, 0
    for it in range(1, cfg.max_iter + 1):
        x_new = _shrink(xw - tau_eff * grad, tau)
        grad_new = prob.grad(x_new)
        if callback is not None:
            callback(it, x_new)
        if cfg.record_history:
            log(x_new)
        dx = x_new - xw
        change = math.sqrt(np.einsum("ij,ij->", dx, dx))
        scale = max(1.0, math.sqrt(np.einsum("ij,ij->", xw, xw)))
        xw, grad = x_new, grad_new
        if change == 0.0 or (change <= cfg.tol_fixed_point * scale and it >= next_check):
            kkt = _kkt_from_grad(xw, mu * grad)
            if kkt <= cfg.tol_kkt:
                termination = "kkt"
                break
            if change == 0.0:
                termination = "fixed-point"
                break
            next_check = it + gap
            gap = min(2 * gap, _MAX_KKT_GAP)
    if kkt is None or termination == "max-iter":
        kkt = _kkt_from_grad(xw, mu * grad)
    return xw, it, kkt, termination, obj_trace, supp_trace


def solve(op, u, x0: HilbertVector | None = None, cfg: SolverConfig | None = None,
          callback: Callable[[int, np.ndarray], None] | None = None) -> SolverReport:
    """Run forward-backward splitting from ``x0`` (default zero).

    Parameters
    ----------
    op : SamplingOperator or array_like
        The ``m x N`` matrix ``A``.
    u : Measurements or array_like
        ``m x K`` data; its inner product defines ``V``.
    x0 : HilbertVector, optional
    cfg : SolverConfig, optional
    callback : callable, optional
        Called as ``callback(k, x)`` after every iteration with the working
        coordinates of ``x^k`` (the V-coordinates when the Gram is the identity).

    Returns
    -------
    SolverReport
        Exhausting ``max_iter`` is reported through ``termination``, not raised.
    """
    cfg = cfg or SolverConfig()
    ip = x0.ip if x0 is not None else None
    prob = _Problem(op, u, ip)
    xw = np.zeros((prob.n, prob.ip.dim)) if x0 is None else prob.to_work(x0)
    tau_eff = prob.step(cfg)
    return _report(prob, xw, cfg.mu, tau_eff, cfg, callback)


def _report(prob, xw, mu, tau_eff, cfg, callback=None) -> SolverReport:
    xw, it, kkt, term, obj, supp = _iterate(prob, xw, mu, tau_eff, cfg, callback)
    return SolverReport(prob.from_work(xw), it, kkt, term, mu, tau_eff / mu, obj, supp)


def _mu_path(mu_start: float, mu: float, factor: float) -> list[float]:
    path = []
    m = mu_start
    while m < mu:
        path.append(m)
        m *= factor
    path.append(mu)
    return path


def solve_continuation(op, u, mu: float, cfg: SolverConfig | None = None,
                       mu_start: float | None = None, factor: float = 10.0,
                       x0: HilbertVector | None = None) -> SolverReport:
    """Solve for a large ``mu`` by warm-starting along ``mu_start * factor**k``.

    Intermediate stages use relaxed tolerances; only the last honours ``cfg``.
    Each stage reuses the same effective step ``tau * mu``.
    """
    cfg = replace(cfg or SolverConfig(), mu=mu)
    if factor <= 1:
        raise ValueError("continuation factor must exceed 1")
    prob = _Problem(op, u, x0.ip if x0 is not None else None)
    if mu_start is None:
        mu_start = min(mu, 2.0 * critical_mu(prob.a, prob.u))
    tau_eff = prob.step(cfg)
    xw = np.zeros((prob.n, prob.ip.dim)) if x0 is None else prob.to_work(x0)
    loose = replace(cfg, tol_kkt=max(cfg.tol_kkt, 1e-4),
                    tol_fixed_point=max(cfg.tol_fixed_point, 1e-6), record_history=False)
    total = 0
    path = _mu_path(mu_start, mu, factor)
    for m_k in path[:-1]:
        xw, it, *_ = _iterate(prob, xw, m_k, tau_eff, replace(loose, mu=m_k))
        total += it
    rep = _report(prob, xw, mu, tau_eff, cfg)
    rep.iterations += total
    return rep


def solve_constrained(op, u, eta: float, cfg: SolverConfig | None = None,
                      mu_start: float | None = None, factor: float = 10.0,
                      max_bracket: int = 40, max_bisect: int = 20,
                      rtol: float = 1e-3) -> SolverReport:
    """Approximate ``min ||z||_{V,1}`` s.t. ``||A z - u||_{V,2} <= eta / sqrt(m)``.

    ``mu`` grows geometrically with warm starts until the residual meets the
    bound, then a bisection in ``log mu`` (at most ``max_bisect`` steps)
    moves it back towards the smallest admissible ``mu``. The returned
    report satisfies the constraint.
    """
    if not eta > 0:
        raise ValueError("eta must be positive; use solve_continuation for eta = 0")
    cfg = cfg or SolverConfig()
    prob = _Problem(op, u, None)
    target = eta / math.sqrt(prob.a.shape[0])
    zero = np.zeros((prob.n, prob.ip.dim))
    if math.sqrt(np.einsum("ij,ij->", prob.u, prob.u)) <= target:
        # x = 0 is feasible and minimizes the norm outright.
        return SolverReport(prob.from_work(zero), 0, 0.0, "kkt",
                            critical_mu(prob.a, prob.u), math.nan)
    tau_eff = prob.step(replace(cfg, step=None))

    def residual(xw):
        r = prob.a @ xw - prob.u
        return math.sqrt(np.einsum("ij,ij->", r, r))

    mu_lo = None
    mu_k = mu_start if mu_start is not None else critical_mu(prob.a, prob.u)
    xw = zero
    for _ in range(max_bracket):
        xw, *_ = _iterate(prob, xw, mu_k, tau_eff, replace(cfg, mu=mu_k))
        if residual(xw) <= target:
            break
        mu_lo = mu_k
        mu_k *= factor
    else:
        raise ConvergenceError(
            f"residual bound {target:.3g} not reached up to mu={mu_k:.3g}", mu_k)
    mu_hi, x_hi = mu_k, xw
    if mu_lo is not None:
        x_lo = None
        for _ in range(max_bisect):
            mid = math.sqrt(mu_lo * mu_hi)
            start = x_hi if x_lo is None else x_lo
            xm, *_ = _iterate(prob, start.copy(), mid, tau_eff, replace(cfg, mu=mid))
            r = residual(xm)
            if r <= target:
                mu_hi, x_hi = mid, xm
                if target - r <= rtol * target:
                    break
            else:
                mu_lo, x_lo = mid, xm
    return _report(prob, x_hi, mu_hi, tau_eff, replace(cfg, mu=mu_hi))
