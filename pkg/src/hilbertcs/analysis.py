"""Brute-force checks of restricted isometry and null space properties.

These are small-scale empirical tools. :func:`rip_constant_exact` is exact by
enumeration of supports; :func:`nsp_randomized_check` can only falsify the
null space property, never prove it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import uniform_bound
from .hilbert import InnerProduct, row_norms
from .multiindex import IndexSet
from .operator import SamplingOperator

__all__ = [
    "RipEstimate",
    "NspWitness",
    "MAX_ENUM_N",
    "MAX_ENUM_S",
    "rip_constant_exact",
    "nsp_randomized_check",
    "nsp_grid_scan",
    "rip_implied_nsp_constants",
    "sample_complexity_bound",
]

MAX_ENUM_N = 20
MAX_ENUM_S = 4
VIOLATION_TOL = 1e-10


def _matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, SamplingOperator) else np.asarray(op, dtype=float)


@dataclass(frozen=True)
class RipEstimate:
    s: int
    delta_s: float
    worst_support: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"s": self.s, "delta_s": self.delta_s, "worst_support": list(self.worst_support)}


@dataclass(frozen=True)
class NspWitness:
    """Outcome of a randomized null-space-property search.

    ``violating_example`` is ``None`` when no violation turned up within the
    trial budget, otherwise a ``(z, S)`` pair with ``z`` an ``N x K`` array.
    """

    s: int
    rho: float
    tau_nsp: float
    trials: int
    violating_example: tuple[np.ndarray, tuple[int, ...]] | None = None
    margin: float = -math.inf

    @property
    def violated(self) -> bool:
        return self.violating_example is not None

    def to_dict(self) -> dict:
        out = {"s": self.s, "rho": self.rho, "tau_nsp": self.tau_nsp,
               "trials": self.trials, "violated": self.violated,
               "max_margin": self.margin}
        if self.violating_example is not None:
            z, supp = self.violating_example
            out["violating_support"] = list(supp)
            out["violating_z"] = z.tolist()
        return out


def rip_constant_exact(op, s: int) -> RipEstimate:
    """Restricted isometry constant of order ``s`` by enumerating supports.

    ``delta_s = max_{|S| = s} max(lambda_max(A_S^T A_S) - 1, 1 - lambda_min(A_S^T A_S))``.
    Limited to ``N <= 20`` and ``s <= 4``.
    """
    a = _matrix(op)
    n = a.shape[1]
    if n > MAX_ENUM_N or s > MAX_ENUM_S:
        raise ValueError(
            f"exact RIP enumeration limited to N <= {MAX_ENUM_N}, s <= {MAX_ENUM_S}"
            f" (got N={n}, s={s})")
    if not 1 <= s <= n:
        raise ValueError(f"order s={s} must lie in [1, N={n}]")
    gram = a.T @ a
    supports = np.array(list(itertools.combinations(range(n), s)), dtype=np.intp)
    blocks = gram[supports[:, :, None], supports[:, None, :]]
    eig = np.linalg.eigvalsh(blocks)
    dev = np.maximum(eig[:, -1] - 1.0, 1.0 - eig[:, 0])
    worst = int(np.argmax(dev))
    return RipEstimate(s, float(max(dev[worst], 0.0)), tuple(supports[worst].tolist()))


def _null_basis(a: np.ndarray) -> np.ndarray:
    return scipy.linalg.null_space(a) if a.shape[0] else np.eye(a.shape[1])


def _draw_candidates(a, s, k, trials, rng):
    """Yield candidate ``z`` arrays cycling through several search strategies."""
    n = a.shape[1]
    null = _null_basis(a)
    strategies = ["sparse", "null", "gaussian", "compressible"]
    if null.shape[1] == 0:
        strategies.remove("null")
    for t in range(trials):
        kind = strategies[t % len(strategies)]
        if kind == "sparse":
            z = np.zeros((n, k))
            rows = rng.choice(n, size=rng.integers(1, s + 1), replace=False)
            z[rows] = rng.standard_normal((rows.size, k))
        elif kind == "null":
            z = null @ rng.standard_normal((null.shape[1], k))
            z += 10.0 ** rng.uniform(-8, -1) * rng.standard_normal((n, k))
        elif kind == "gaussian":
            z = rng.standard_normal((n, k))
        else:
            decay = np.exp(-rng.uniform(0.1, 2.0) * rng.permutation(n))
            z = decay[:, None] * rng.standard_normal((n, k))
        yield z


def _nsp_terms(a, z, supp, ip):
    norms = row_norms(z, ip)
    mask = np.zeros(norms.size, dtype=bool)
    mask[list(supp)] = True
    lhs = math.sqrt(float(norms[mask] @ norms[mask]))
    tail = float(norms[~mask].sum())
    az = row_norms(a @ z, ip)
    return lhs, tail, math.sqrt(float(az @ az))


def _samples(a, s, trials, ip, k, seed):
    rng = np.random.default_rng(seed)
    n = a.shape[1]
    for z in _draw_candidates(a, s, k, trials, rng):
        norms = row_norms(z, ip)
        # The s largest rows are the hardest support for a fixed z.
        top = tuple(sorted(np.argsort(-norms, kind="stable")[:s].tolist()))
        rand = tuple(sorted(rng.choice(n, size=rng.integers(1, s + 1), replace=False).tolist()))
        for supp in (top, rand):
            yield z, supp, _nsp_terms(a, z, supp, ip)


def nsp_randomized_check(op, s: int, rho: float, tau_nsp: float, trials: int = 10_000,
                         ip: InnerProduct | None = None, K: int | None = None,
                         seed: int = 0) -> NspWitness:
    """Search for a violation of the l_{V,2}-robust null space property.

    Tests ``||z_S||_{V,2} <= rho / sqrt(s) ||z_{S^c}||_{V,1} + tau_nsp ||A z||_{V,2}``
    on random ``z`` in ``V^N`` (``R^{N x K}`` with inner product ``ip``) and
    supports with ``#S <= s``, and returns the first violation found.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    a = _matrix(op)
    if K is None:
        K = ip.dim if ip is not None else 1
    if ip is not None and ip.dim != K:
        raise ValueError("K does not match the inner product")
    best = -math.inf
    for z, supp, (lhs, tail, az) in _samples(a, s, trials, ip, K, seed):
        margin = lhs - (rho / math.sqrt(s) * tail + tau_nsp * az)
        best = max(best, margin)
        if margin > VIOLATION_TOL:
            return NspWitness(s, rho, tau_nsp, trials, (z, supp), margin)
    return NspWitness(s, rho, tau_nsp, trials, None, best)


def nsp_grid_scan(op, s: int, rhos, taus, trials: int = 10_000,
                  ip: InnerProduct | None = None, K: int | None = None,
                  seed: int = 0) -> list[NspWitness]:
    """Run the randomized search on every ``(rho, tau)`` of a grid.

    All grid points see the same candidate vectors; a violated point
    reports its worst candidate. Points with no violation form the
    empirically feasible region.
    """
    a = _matrix(op)
    if K is None:
        K = ip.dim if ip is not None else 1
    samples = list(_samples(a, s, trials, ip, K, seed))
    lhs, tail, az = np.array([t for _, _, t in samples]).T
    out = []
    for rho in rhos:
        for tau in taus:
            margin = lhs - (rho / math.sqrt(s) * tail + tau * az)
            worst = int(np.argmax(margin))
            example = samples[worst][:2] if margin[worst] > VIOLATION_TOL else None
            out.append(NspWitness(s, float(rho), float(tau), trials, example,
                                  float(margin.max())))
    return out


def rip_implied_nsp_constants(delta_2s: float) -> tuple[float, float]:
    """Robust null space constants ``(rho, tau)`` implied by ``delta_2s < 4/sqrt(41)``.

    Uses the classical bounds ``rho = delta / (sqrt(1 - delta^2) - delta/4)`` and
    ``tau = sqrt(1 + delta) / (sqrt(1 - delta^2) - delta/4)``.
    """
    if not 0 <= delta_2s < 4 / math.sqrt(41):
        raise ValueError("delta_2s must lie in [0, 4/sqrt(41))")
    den = math.sqrt(1 - delta_2s ** 2) - delta_2s / 4
    return delta_2s / den, math.sqrt(1 + delta_2s) / den


def sample_complexity_bound(index_set: IndexSet, s: int, C: float) -> int:
    r"""Evaluate the sufficient sample count

    ``C Theta^2 s max{log^2(Theta^2 s) log N, log(Theta^2 s) log(log(Theta^2 s) N^{log s})}``

    with natural logarithms. ``C`` is left to the caller.
    """
    if s < 2:
        raise ValueError("sample complexity bound needs s >= 2")
    if not C > 0:
        raise ValueError("C must be positive")
    theta = uniform_bound(index_set)
    n = len(index_set)
    t = theta ** 2 * s
    lt = math.log(t)
    first = lt ** 2 * math.log(n)
    # log(log(t) * N^{log s}) expanded to stay finite for large N.
    second = lt * (math.log(lt) + math.log(s) * math.log(n))
    return math.ceil(C * t * max(first, second))
