"""Normalized sampling operator ``A = (Psi_nu(y_i) / sqrt(m))``.

``A`` has scalar entries and acts on the coefficient index of an element
of ``V^N`` identically for every V-coordinate, so ``A z`` is the matrix
product of ``A`` with the ``N x K`` coefficient matrix, and the adjoint is
the plain transpose whatever the Gram matrix of ``V``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import design_matrix
from .hilbert import HilbertVector, InnerProduct
from .multiindex import IndexSet

__all__ = [
    "ConvergenceError",
    "Measurements",
    "SamplingOperator",
    "assemble",
    "apply",
    "adjoint_apply",
    "spectral_norm_sq",
    "colwise_matmul",
    "save_samples",
    "load_samples",
]


class ConvergenceError(RuntimeError):
    """Iterative method stopped before meeting its tolerance.

    Attributes
    ----------
    estimate : float
        Best value available when the iteration stopped.
    """

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


def colwise_matmul(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``a @ x`` computed one column of ``x`` at a time.

    Each output column only depends on the matching input column, bit for
    bit, regardless of how many columns ``x`` has. Blocked BLAS products do
    not guarantee this.
    """
    return np.matmul(a, x.T[:, :, None])[:, :, 0].T


@dataclass(frozen=True)
class Measurements:
    """Normalized outputs, row ``i`` holding ``u(y_i) / sqrt(m)``."""

    data: np.ndarray
    ip: InnerProduct | None = None

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or not np.all(np.isfinite(data)):
            raise ValueError("measurements must be a finite m x K matrix")
        ip = self.ip if self.ip is not None else InnerProduct(data.shape[1])
        if ip.dim != data.shape[1]:
            raise ValueError("measurement width does not match the inner product")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "ip", ip)

    @classmethod
    def from_solutions(cls, solutions, ip: InnerProduct | None = None) -> "Measurements":
        """Normalize raw solution snapshots ``u(y_i)`` (one per row)."""
        sols = np.atleast_2d(np.asarray(solutions, dtype=float))
        return cls(sols / np.sqrt(sols.shape[0]), ip)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class SamplingOperator:
    """Dense ``m x N`` sampling matrix with its provenance.

    ``samples`` and ``index_set`` are ``None`` for operators built directly
    from a matrix (e.g. Gaussian test ensembles).
    """

    matrix: np.ndarray
    samples: np.ndarray | None = None
    index_set: IndexSet | None = None
    _gram: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2 or not np.all(np.isfinite(mat)):
            raise ValueError("sampling matrix must be a finite 2-D array")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, matrix) -> "SamplingOperator":
        return cls(np.asarray(matrix, dtype=float))

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def T(self) -> np.ndarray:
        return self.matrix.T

    def normal_matrix(self) -> np.ndarray:
        """Cached ``A^T A``."""
        if "ata" not in self._gram:
            self._gram["ata"] = self.matrix.T @ self.matrix
        return self._gram["ata"]

    def restrict(self, m: int) -> "SamplingOperator":
        """Operator built from the first ``m`` samples, renormalized by ``1/sqrt(m)``."""
        if self.samples is None or self.index_set is None:
            raise ValueError("restriction needs the operator's samples and index set")
        return assemble(self.index_set, self.samples[:m])


def assemble(index_set: IndexSet, samples) -> SamplingOperator:
    """Build ``A_ij = Psi_{nu_j}(y_i) / sqrt(m)`` from points ``y_i`` in ``[-1, 1]^d``."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.shape[0] < 1:
        raise ValueError("need at least one sample")
    if pts.shape[1] != index_set.dimension:
        raise ValueError(
            f"samples have dimension {pts.shape[1]}, index set has {index_set.dimension}")
    mat = design_matrix(index_set, pts) / np.sqrt(pts.shape[0])
    pts = pts.copy()
    pts.setflags(write=False)
    return SamplingOperator(mat, pts, index_set)


def apply(op: SamplingOperator, z: HilbertVector) -> Measurements:
    """``A z``."""
    if z.rows != op.n:
        raise ValueError(f"operator has {op.n} columns, vector has {z.rows} rows")
    return Measurements(op.matrix @ z.data, z.ip)


def adjoint_apply(op: SamplingOperator, r: Measurements) -> HilbertVector:
    """``A^* r``, the transpose applied row-wise."""
    if r.shape[0] != op.m:
        raise ValueError(f"operator has {op.m} rows, measurements have {r.shape[0]}")
    return HilbertVector(op.matrix.T @ r.data, r.ip)


def spectral_norm_sq(op, tol: float = 1e-10, max_iter: int = 10_000,
                     seed: int = 0) -> float:
    """Largest eigenvalue of ``A^T A`` by power iteration.

    Iterates until the Rayleigh quotient's relative increment drops below
    ``tol``. The Rayleigh quotient never exceeds the true value.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` is reached; ``estimate`` carries the last quotient.
    """
    a = op.matrix if isinstance(op, SamplingOperator) else np.asarray(op, dtype=float)
    if not np.any(a):
        raise ValueError("spectral norm estimate needs a nonzero matrix")
    v = np.random.default_rng(seed).standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = a.T @ (a @ v)
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # Start vector fell in the null space; restart deterministically.
            v = np.ones(a.shape[1]) / np.sqrt(a.shape[1])
            continue
        v = w / nw
        if new > 0 and abs(new - lam) <= tol * new:
            return new
        lam = new
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} in {max_iter} iterations", lam)


def save_samples(samples, path) -> None:
    """One parameter point per line, comma separated."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in pts:
            writer.writerow([repr(float(v)) for v in row])


def load_samples(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = [[float(v) for v in r] for r in csv.reader(fh) if r]
    return np.array(rows, dtype=float)
