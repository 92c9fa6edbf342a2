"""Hilbert-valued polynomial expansions and their moments.

For an expansion ``u = sum_nu c_nu Psi_nu`` in a basis orthonormal under
the sampling measure, ``E[u] = c_0`` and ``Var[u](x) = sum_{nu != 0} c_nu(x)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .basis import design_matrix
from .hilbert import HilbertVector
from .multiindex import IndexSet

__all__ = ["ExpansionModel", "truncation_error"]


@dataclass(frozen=True)
class ExpansionModel:
    """Coefficients ``c_nu`` (rows of ``coefficients``) over ``index_set``."""

    index_set: IndexSet
    coefficients: HilbertVector

    def __post_init__(self):
        if self.coefficients.rows != len(self.index_set):
            raise ValueError("one coefficient row per multi-index is required")

    def evaluate(self, y) -> np.ndarray:
        """``u(y)`` for points ``y`` in ``[-1, 1]^d``, one row per point."""
        return design_matrix(self.index_set, y) @ self.coefficients.data

    def mean(self) -> np.ndarray:
        zero = self.index_set.rank((0,) * self.index_set.dimension)
        if zero is None:
            return np.zeros(self.coefficients.shape[1])
        return self.coefficients.data[zero].copy()

    def variance(self) -> np.ndarray:
        data = self.coefficients.data
        zero = self.index_set.rank((0,) * self.index_set.dimension)
        sq = np.einsum("ij,ij->j", data, data)
        if zero is not None:
            sq = sq - data[zero] ** 2
        return np.maximum(sq, 0.0)

    def std(self) -> np.ndarray:
        return np.sqrt(self.variance())

    def restrict(self, rows: Iterable[int]) -> "ExpansionModel":
        """Copy with every coefficient outside ``rows`` set to zero."""
        keep = np.zeros(self.coefficients.rows, dtype=bool)
        keep[list(rows)] = True
        data = np.where(keep[:, None], self.coefficients.data, 0.0)
        return ExpansionModel(self.index_set, HilbertVector(data, self.coefficients.ip))

    def top_rows(self, s: int) -> list[int]:
        """Positions of the ``s`` coefficients with largest V-norm."""
        norms = self.coefficients.row_norms()
        return sorted(np.argsort(-norms, kind="stable")[:s].tolist())

    def best_s_term(self, s: int) -> "ExpansionModel":
        return self.restrict(self.top_rows(s))

    def l2_distance(self, other: "ExpansionModel") -> float:
        """``||u - v||_{L^2(rho; V)}`` by Parseval over the union of both index sets."""
        if self.index_set.dimension != other.index_set.dimension:
            raise ValueError("expansions live in different parametric dimensions")
        ip = self.coefficients.ip
        diff = {}
        for nu, row in zip(self.index_set, self.coefficients.data):
            diff[nu] = row.copy()
        for nu, row in zip(other.index_set, other.coefficients.data):
            diff[nu] = diff[nu] - row if nu in diff else -row
        rows = np.array(list(diff.values()))
        norms = HilbertVector(rows, ip).row_norms()
        return float(math.sqrt(norms @ norms))


def truncation_error(coefficients: HilbertVector, kept: Iterable[int]) -> float:
    """``sqrt(sum_{nu not kept} ||c_nu||_V^2)``, the L^2 error of dropping rows."""
    mask = np.ones(coefficients.rows, dtype=bool)
    mask[list(kept)] = False
    norms = coefficients.row_norms()[mask]
    return float(math.sqrt(norms @ norms))
