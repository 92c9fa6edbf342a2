"""Hilbert-valued coefficient vectors and their mixed norms.

An element of ``V^N`` is stored as an ``N x K`` real matrix whose row ``j``
holds the coordinates of the ``j``-th coefficient in a ``K``-dimensional
discretization of ``V``. The inner product on ``V`` is ``<v, w> = v^T M w``
for a symmetric positive-definite Gram matrix ``M`` (the identity when the
coordinates are already orthonormal).
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "InnerProduct",
    "HilbertVector",
    "v_norm",
    "row_norms",
    "mixed_norm",
    "row_support",
    "save_csv",
    "load_csv",
]

_SPD_CHECK_MAX = 500


class InnerProduct:
    """Inner product ``<v, w>_V = v^T M w`` on ``R^K``.

    Parameters
    ----------
    dim : int
        Discretization dimension ``K``.
    gram : array_like, optional
        SPD ``K x K`` Gram matrix. ``None`` means the identity.
    """

    def __init__(self, dim: int, gram=None):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        if gram is None:
            self.kind = "identity"
            self.gram = None
            self._chol = None
            return
        gram = np.array(gram, dtype=float)
        if gram.shape != (dim, dim):
            raise ValueError(f"gram has shape {gram.shape}, expected {(dim, dim)}")
        scale = max(np.abs(gram).max(), np.finfo(float).tiny)
        if np.abs(gram - gram.T).max() > 1e-12 * scale:
            raise ValueError("gram matrix is not symmetric")
        gram = 0.5 * (gram + gram.T)
        self._chol = None
        if dim <= _SPD_CHECK_MAX:
            try:
                self._chol = scipy.linalg.cholesky(gram, lower=True)
            except np.linalg.LinAlgError as exc:
                raise ValueError("gram matrix is not positive definite") from exc
        gram.setflags(write=False)
        self.kind = "explicit-spd"
        self.gram = gram

    @classmethod
    def identity(cls, dim: int) -> "InnerProduct":
        return cls(dim)

    @property
    def is_identity(self) -> bool:
        return self.gram is None

    @property
    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor ``L`` with ``M = L L^T``."""
        if self.gram is None:
            return np.eye(self.dim)
        if self._chol is None:
            self._chol = scipy.linalg.cholesky(self.gram, lower=True)
        return self._chol

    def inner(self, v, w) -> float:
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        if v.shape != (self.dim,) or w.shape != (self.dim,):
            raise ValueError("vector length does not match the inner product")
        return float(v @ w) if self.gram is None else float(v @ self.gram @ w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InnerProduct):
            return NotImplemented
        if self.dim != other.dim or self.kind != other.kind:
            return False
        return self.gram is None or self.gram is other.gram or np.array_equal(
            self.gram, other.gram)

    def __hash__(self) -> int:
        return hash((self.dim, self.kind))

    def __repr__(self) -> str:
        return f"InnerProduct(dim={self.dim}, kind={self.kind!r})"


def row_norms(data: np.ndarray, ip: InnerProduct | None = None) -> np.ndarray:
    """V-norm of every row of an ``(N, K)`` array."""
    data = np.asarray(data, dtype=float)
    if ip is None or ip.gram is None:
        return np.sqrt(np.einsum("ij,ij->i", data, data))
    if data.shape[-1] != ip.dim:
        raise ValueError("row length does not match the inner product")
    quad = np.einsum("ij,ij->i", data @ ip.gram, data)
    return np.sqrt(np.maximum(quad, 0.0))


def v_norm(row, ip: InnerProduct) -> float:
    """``||v||_V = sqrt(v^T M v)``."""
    row = np.asarray(row, dtype=float)
    if row.shape != (ip.dim,):
        raise ValueError(f"vector of length {row.size} does not match K={ip.dim}")
    return float(row_norms(row[None, :], ip)[0])


class HilbertVector:
    """Element of ``V^N`` discretized as an ``N x K`` matrix.

    Supports ``+``, ``-``, scalar ``*`` and ``axpy``; results share the
    inner product of the operands.
    """

    __array_priority__ = 100

    def __init__(self, data, ip: InnerProduct | None = None):
        data = np.array(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ValueError("HilbertVector data must be an N x K matrix")
        if not np.all(np.isfinite(data)):
            raise ValueError("HilbertVector entries must be finite")
        if ip is None:
            ip = InnerProduct(data.shape[1])
        elif ip.dim != data.shape[1]:
            raise ValueError(f"data has K={data.shape[1]} columns, inner product has {ip.dim}")
        self.data = data
        self.ip = ip

    @classmethod
    def zeros(cls, n: int, ip: InnerProduct) -> "HilbertVector":
        return cls(np.zeros((n, ip.dim)), ip)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def row_norms(self) -> np.ndarray:
        return row_norms(self.data, self.ip)

    def norm(self, q: float = 2.0) -> float:
        return mixed_norm(self, q)

    def copy(self) -> "HilbertVector":
        return HilbertVector(self.data.copy(), self.ip)

    def _check(self, other: "HilbertVector") -> None:
        if not isinstance(other, HilbertVector):
            raise TypeError(f"expected HilbertVector, got {type(other).__name__}")
        if other.data.shape != self.data.shape:
            raise ValueError(f"shape mismatch {self.data.shape} vs {other.data.shape}")
        if other.ip != self.ip:
            raise ValueError("inner products differ")

    def __add__(self, other: "HilbertVector") -> "HilbertVector":
        self._check(other)
        return HilbertVector(self.data + other.data, self.ip)

    def __sub__(self, other: "HilbertVector") -> "HilbertVector":
        self._check(other)
        return HilbertVector(self.data - other.data, self.ip)

    def __neg__(self) -> "HilbertVector":
        return HilbertVector(-self.data, self.ip)

    def __mul__(self, alpha: float) -> "HilbertVector":
        if not np.isscalar(alpha):
            return NotImplemented
        return HilbertVector(float(alpha) * self.data, self.ip)

    __rmul__ = __mul__

    def __truediv__(self, alpha: float) -> "HilbertVector":
        return self * (1.0 / alpha)

    def scale(self, alpha: float) -> "HilbertVector":
        return self * alpha

    def axpy(self, alpha: float, other: "HilbertVector") -> "HilbertVector":
        """Return ``alpha * self + other``."""
        self._check(other)
        return HilbertVector(alpha * self.data + other.data, self.ip)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HilbertVector):
            return NotImplemented
        return self.ip == other.ip and np.array_equal(self.data, other.data)

    __hash__ = None

    def __repr__(self) -> str:
        n, k = self.data.shape
        return f"HilbertVector(N={n}, K={k}, ip={self.ip.kind!r})"


def mixed_norm(c: HilbertVector, q: float) -> float:
    """``||c||_{V,q}``: the l_q norm of the row V-norms."""
    if q < 1:
        raise ValueError("mixed norm requires q >= 1")
    norms = c.row_norms()
    if norms.size == 0:
        return 0.0
    if np.isinf(q):
        return float(norms.max())
    if q == 1:
        return float(norms.sum())
    if q == 2:
        return float(np.sqrt(norms @ norms))
    return float((norms ** q).sum() ** (1.0 / q))


def row_support(c: HilbertVector, tol: float = 0.0) -> frozenset[int]:
    """Rows whose V-norm exceeds ``tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return frozenset(np.flatnonzero(c.row_norms() > tol).tolist())


# --- CSV checkpoint format ------------------------------------------------

def _descriptor_path(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


def save_csv(c: HilbertVector, path) -> tuple[Path, Path]:
    """Write ``row,col,value`` triples plus a JSON descriptor sidecar.

    Returns the paths of the CSV file and the descriptor.
    """
    path = Path(path)
    n, k = c.data.shape
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row", "col", "value"])
            for i in range(n):
                for j in range(k):
                    writer.writerow([i, j, repr(float(c.data[i, j]))])
        desc = {"N": n, "K": k, "gram": c.ip.kind}
        if c.ip.gram is not None:
            desc["gram_matrix"] = c.ip.gram.tolist()
        side = _descriptor_path(path)
        side.write_text(json.dumps(desc, indent=1) + "\n")
    except OSError as exc:
        raise OSError(f"could not write Hilbert vector to {path}: {exc}") from exc
    return path, side


def load_csv(path, ip: InnerProduct | None = None) -> HilbertVector:
    """Read a vector written by :func:`save_csv`."""
    path = Path(path)
    desc = json.loads(_descriptor_path(path).read_text())
    n, k = int(desc["N"]), int(desc["K"])
    data = np.zeros((n, k))
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["row", "col", "value"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row, col, value in reader:
            data[int(row), int(col)] = float(value)
    if ip is None:
        gram = desc.get("gram_matrix") if desc.get("gram") == "explicit-spd" else None
        ip = InnerProduct(k, gram)
    return HilbertVector(data, ip)
