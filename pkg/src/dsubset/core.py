"""Data model and criterion evaluation.

A regressor set is an ``n x m`` matrix whose rows are the regressors.
Subsets are ordered tuples of row indices; the order records the order of
selection.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import InvalidSubsetError, SingularUniverseError

#: ``M`` is declared singular when ``det(M) < DET_RTOL * (trace(M)/m)**m``.
DET_RTOL = 1e-12


class Criterion(str, Enum):
    D = "D"
    A = "A"

    @classmethod
    def parse(cls, value) -> "Criterion":
        if isinstance(value, Criterion):
            return value
        return cls(str(value).upper())


@dataclass(frozen=True)
class RegressorSet:
    """Immutable ``n x m`` regressor matrix, row ``i`` is ``f_i'``."""

    data: np.ndarray

    def __post_init__(self):
        arr = _validated(np.array(self.data, dtype=np.float64, order="C", copy=True))
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]

    def nonsingular(self) -> bool:
        return _row_rank(self.data) == self.m


def _validated(arr: np.ndarray) -> np.ndarray:
    if arr.ndim != 2:
        raise ValueError(f"regressor matrix must be 2-D, got shape {arr.shape}")
    n, m = arr.shape
    if not 2 <= m <= n:
        raise ValueError(f"need 2 <= m <= n, got n={n}, m={m}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("regressor matrix contains non-finite entries")
    return arr


def as_matrix(F) -> np.ndarray:
    """Validated float64 C-ordered view of ``F`` (no copy when possible).

    Callers must not write to the result.
    """
    if isinstance(F, RegressorSet):
        return F.data
    return _validated(np.ascontiguousarray(F, dtype=np.float64))


def check_subset(n: int, S: Iterable[int]) -> tuple[int, ...]:
    idx = tuple(int(i) for i in S)
    if len(set(idx)) != len(idx):
        raise InvalidSubsetError(f"subset contains duplicate indices: {list(idx)}")
    bad = [i for i in idx if not 0 <= i < n]
    if bad:
        raise InvalidSubsetError(f"indices out of range [0, {n}): {bad}")
    return idx


def info_matrix(F, S: Sequence[int]) -> np.ndarray:
    """Information matrix ``sum_{i in S} f_i f_i'`` (zero matrix for empty S)."""
    X = as_matrix(F)
    idx = check_subset(X.shape[0], S)
    if not idx:
        return np.zeros((X.shape[1], X.shape[1]))
    rows = X[list(idx)]
    return rows.T @ rows


def _log_det_or_none(M: np.ndarray) -> float | None:
    """Log-determinant by pivoted LU, or None when M is numerically singular."""
    m = M.shape[0]
    tr = float(np.trace(M))
    if not tr > 0:
        return None
    with warnings.catch_warnings():
        # exactly singular input is an expected case, reported as None
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, _ = sla.lu_factor(M, check_finite=False)
    piv = np.abs(np.diag(lu))
    if np.any(piv == 0):
        return None
    logdet = float(np.sum(np.log(piv)))
    if logdet < np.log(DET_RTOL) + m * np.log(tr / m):
        return None
    return logdet


def is_singular(M: np.ndarray) -> bool:
    return _log_det_or_none(np.asarray(M, dtype=float)) is None


def d_criterion(M) -> float:
    """``det(M)**(1/m)``; exactly 0 for a numerically singular M."""
    M = np.asarray(M, dtype=float)
    logdet = _log_det_or_none(M)
    if logdet is None:
        return 0.0
    return float(np.exp(logdet / M.shape[0]))


def a_criterion(M) -> float:
    """``(sum_i 1/lambda_i(M))**-1``; exactly 0 for a numerically singular M."""
    M = np.asarray(M, dtype=float)
    if _log_det_or_none(M) is None:
        return 0.0
    lam = sla.eigvalsh(M, check_finite=False)
    if lam[0] <= 0:
        return 0.0
    return float(1.0 / np.sum(1.0 / lam))


def criterion_value(M, criterion="D") -> float:
    if Criterion.parse(criterion) is Criterion.D:
        return d_criterion(M)
    return a_criterion(M)


def subset_value(F, S, criterion="D") -> float:
    return criterion_value(info_matrix(F, S), criterion)


def orthogonal_rank(F, S: Iterable[int]) -> int:
    """Numerical rank of the rows ``F[S]`` via column-pivoted QR.

    A diagonal entry of ``R`` counts when it exceeds
    ``max(|S|, m) * eps * |R[0, 0]|``.
    """
    X = np.asarray(F.data if isinstance(F, RegressorSet) else F, dtype=float)
    idx = check_subset(X.shape[0], S)
    if not idx:
        return 0
    return _row_rank(X[list(idx)])


def _row_rank(A: np.ndarray) -> int:
    R = sla.qr(A, mode="r", pivoting=True, check_finite=False)[0]
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0:
        return 0
    tol = max(A.shape) * np.finfo(float).eps * d[0]
    return int(np.sum(d > tol))


def leverage_scores(F) -> np.ndarray:
    """Leverages ``h_i = f_i' M(F)^{-1} f_i``, computed from a thin QR."""
    X = as_matrix(F)
    n, m = X.shape
    if _row_rank(X) < m:
        raise SingularUniverseError("M(F) is singular; leverage scores undefined")
    Q, _ = np.linalg.qr(X, mode="reduced")
    h = np.einsum("ij,ij->i", Q, Q)
    return h
