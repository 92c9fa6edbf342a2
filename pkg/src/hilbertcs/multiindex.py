"""Multi-index sets truncating a polynomial expansion.

A multi-index is a tuple of ``d`` nonnegative integers. Index sets are kept
in a canonical order (ascending total degree, ties broken lexicographically)
so that the column order of every sampling matrix built from them is
reproducible.
"""
from __future__ import annotations

import itertools
import math
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "CapacityError",
    "IndexSet",
    "MultiIndex",
    "total_degree_set",
    "index_rank",
]

MultiIndex = tuple  # tuple[int, ...]


class CapacityError(OverflowError):
    """Raised when an index set is too large to be stored."""


def _as_multiindex(nu: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(v) for v in nu)
    if any(v < 0 for v in out):
        raise ValueError(f"multi-index entries must be nonnegative, got {out}")
    return out


def _canonical_key(nu: tuple[int, ...]) -> tuple:
    return (sum(nu), nu)


class IndexSet:
    """Finite, canonically ordered set of multi-indices in ``N_0^d``.

    Parameters
    ----------
    dimension : int
        Ambient parametric dimension ``d``.
    indices : iterable of sequences of int
        The multi-indices. They are sorted into canonical order; duplicates
        are rejected.
    kind : {"explicit-list", "total-degree"}
        Provenance tag.
    """

    def __init__(self, dimension: int, indices: Iterable[Sequence[int]],
                 kind: str = "explicit-list"):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        if kind not in ("explicit-list", "total-degree"):
            raise ValueError(f"unknown index set kind {kind!r}")
        items = [_as_multiindex(nu) for nu in indices]
        for nu in items:
            if len(nu) != dimension:
                raise ValueError(
                    f"multi-index {nu} has length {len(nu)}, expected {dimension}")
        items.sort(key=_canonical_key)
        self._rank = {nu: j for j, nu in enumerate(items)}
        if len(self._rank) != len(items):
            raise ValueError("index set contains duplicate multi-indices")
        self.dimension = int(dimension)
        self.kind = kind
        arr = np.array(items, dtype=np.int64).reshape(len(items), dimension)
        arr.setflags(write=False)
        self._array = arr
        self._items = items

    @property
    def array(self) -> np.ndarray:
        """Read-only ``(N, d)`` integer array of indices in canonical order."""
        return self._array

    @property
    def max_degree(self) -> int:
        """Largest univariate degree appearing in the set."""
        return int(self._array.max()) if len(self) else 0

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self._items)

    def __getitem__(self, j: int) -> tuple[int, ...]:
        return self._items[j]

    def __contains__(self, nu) -> bool:
        return tuple(int(v) for v in nu) in self._rank

    def __eq__(self, other) -> bool:
        if not isinstance(other, IndexSet):
            return NotImplemented
        return self.dimension == other.dimension and self._items == other._items

    def __hash__(self) -> int:
        return hash((self.dimension, tuple(self._items)))

    def __repr__(self) -> str:
        return f"IndexSet(d={self.dimension}, N={len(self)}, kind={self.kind!r})"

    def rank(self, nu: Sequence[int]) -> int | None:
        """Canonical position of ``nu``, or ``None`` when ``nu`` is absent."""
        if len(nu) != self.dimension:
            raise ValueError(
                f"multi-index has length {len(nu)}, expected {self.dimension}")
        return self._rank.get(tuple(int(v) for v in nu))

    def issubset(self, other: "IndexSet") -> bool:
        return self.dimension == other.dimension and all(nu in other for nu in self)

    # --- plain-text provenance format -------------------------------------

    def to_text(self) -> str:
        """One index per line, space-separated integers."""
        return "".join(" ".join(str(v) for v in nu) + "\n" for nu in self._items)

    @classmethod
    def from_text(cls, text: str, dimension: int | None = None) -> "IndexSet":
        rows = [line.split() for line in text.splitlines() if line.strip()]
        if dimension is None:
            if not rows:
                raise ValueError("cannot infer dimension from an empty list")
            dimension = len(rows[0])
        return cls(dimension, ([int(v) for v in r] for r in rows))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path, dimension: int | None = None) -> "IndexSet":
        return cls.from_text(Path(path).read_text(), dimension)


def _degree_shell(total: int, d: int) -> Iterator[tuple[int, ...]]:
    # Every nu with |nu| == total, read off from multisets of coordinates.
    for combo in itertools.combinations_with_replacement(range(d), total):
        nu = [0] * d
        for i in combo:
            nu[i] += 1
        yield tuple(nu)


def total_degree_set(d: int, p: int, max_cardinality: int | None = None) -> IndexSet:
    """Total-degree set ``{nu in N_0^d : |nu| <= p}``.

    Parameters
    ----------
    d : int
        Parametric dimension, ``d >= 1``.
    p : int
        Total polynomial degree, ``p >= 0``.
    max_cardinality : int, optional
        Refuse sets larger than this. Defaults to the largest cardinality
        whose ``(N, d)`` index array is addressable.

    Returns
    -------
    IndexSet
        ``binom(d + p, p)`` indices in canonical order.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if p < 0:
        raise ValueError("p must be >= 0")
    n = math.comb(d + p, p)
    limit = np.iinfo(np.intp).max // d if max_cardinality is None else max_cardinality
    if n > limit:
        raise CapacityError(
            f"total-degree set with d={d}, p={p} has {n} elements, above the limit {limit}")
    items = [nu for deg in range(p + 1) for nu in _degree_shell(deg, d)]
    return IndexSet(d, items, kind="total-degree")


def index_rank(index_set: IndexSet, nu: Sequence[int]) -> int | None:
    """Position of ``nu`` in ``index_set`` or ``None``."""
    return index_set.rank(nu)
