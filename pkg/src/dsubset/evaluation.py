"""Ground truth for efficiency: exhaustive optimum and approximate-design bound."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import DET_RTOL, Criterion, as_matrix, check_subset, criterion_value, info_matrix
from .errors import ConvergenceError, DSubsetError, InstanceTooLargeError, SingularUniverseError

BRUTE_FORCE_LIMIT = 10**7
_CHUNK = 1 << 15
_TIE_RTOL = 1e-12


def _batch_values(X: np.ndarray, combos: np.ndarray, criterion: Criterion) -> np.ndarray:
    """Criterion value of each row-subset in ``combos`` (shape ``(N, s)``)."""
    m = X.shape[1]
    rows = X[combos]                                   # (N, s, m)
    M = np.einsum("nsi,nsj->nij", rows, rows)          # (N, m, m)
    tr = np.einsum("nii->n", M)
    with np.errstate(divide="ignore", invalid="ignore"):
        if criterion is Criterion.D and combos.shape[1] == m:
            sign, logabs = np.linalg.slogdet(rows)
            logdet = 2.0 * logabs
        else:
            sign, logdet = np.linalg.slogdet(M)
            logdet = np.where(sign > 0, logdet, -np.inf)
        singular = ~(logdet >= np.log(DET_RTOL) + m * np.log(tr / m))
        if criterion is Criterion.D:
            vals = np.exp(logdet / m)
        else:
            lam = np.linalg.eigvalsh(M)
            vals = 1.0 / np.sum(1.0 / lam, axis=1)
            singular |= ~(lam[:, 0] > 0)
    vals[singular | (tr <= 0)] = 0.0
    return vals


def brute_force_optimal(F, s: int | None = None, criterion="D", limit: int = BRUTE_FORCE_LIMIT):
    """Exhaustive search for an optimal ``s``-subset.

    Returns ``(subset, value)`` with the lexicographically smallest maximizer
    (values within a relative 1e-12 of the optimum count as ties).

    Raises
    ------
    InstanceTooLargeError
        If ``C(n, s)`` exceeds ``limit``.
    """
    X = as_matrix(F)
    n, m = X.shape
    s = m if s is None else int(s)
    if not 1 <= s <= n:
        raise DSubsetError(f"subset size {s} not in [1, {n}]")
    total = math.comb(n, s)
    if total > limit:
        raise InstanceTooLargeError(f"C({n}, {s}) = {total} exceeds the limit {limit}")
    crit = Criterion.parse(criterion)
    it = itertools.combinations(range(n), s)
    best_val, best_combo = -1.0, None
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, _CHUNK)),
                           dtype=np.intp)
        if flat.size == 0:
            break
        combos = flat.reshape(-1, s)
        vals = _batch_values(X, combos, crit)
        top = float(vals.max())
        if best_combo is None or top > best_val * (1 + _TIE_RTOL):
            k = int(np.flatnonzero(vals >= top * (1 - _TIE_RTOL))[0])
            best_val, best_combo = float(vals[k]), tuple(int(i) for i in combos[k])
    return best_combo, best_val


@dataclass
class ApproximateDesign:
    """Probability weights over the rows of ``F``."""

    weights: np.ndarray
    value: float          # det(sum_i w_i f_i f_i')**(1/m)
    max_leverage: float   # certificate: max_i f_i' M(w)^{-1} f_i
    leverages: np.ndarray
    iterations: int

    @property
    def m(self) -> int:
        return int(round(float(self.weights @ self.leverages)))

    @property
    def gap(self) -> float:
        return self.max_leverage / self.m - 1.0

    @property
    def upper_value(self) -> float:
        """Certified upper bound on the optimal value.

        For D-optimality ``value(xi*) <= value(xi) * max_i h_i(xi) / m``, so
        this bound exceeds the optimum by at most the factor ``1 + tol``.
        """
        return self.value * max(1.0, self.max_leverage / self.m)


def _leverages(X: np.ndarray, w: np.ndarray):
    """Leverages under design ``w`` and ``log det M(w)``."""
    M = (X * w[:, None]).T @ X
    L = sla.cholesky(M, lower=True, check_finite=False)
    Y = sla.solve_triangular(L, X.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", Y, Y), 2.0 * float(np.sum(np.log(np.diag(L))))


def _deletion_threshold(eps: float, m: int) -> float:
    """Rows with leverage below this cannot support a D-optimal design.

    ``eps = max_i h_i - m`` is the current certificate excess.
    """
    return m * (1.0 + eps / 2.0 - math.sqrt(eps * (4.0 + eps - 4.0 / m)) / 2.0)


def approx_design_optimum(F, tol: float = 1e-5, max_iter: int = 10**6,
                          delete: bool = True) -> ApproximateDesign:
    """D-optimal approximate design by multiplicative weight updates.

    Iterates ``w_i <- w_i h_i(w) / m`` from uniform weights until
    ``max_i h_i(w) <= m (1 + tol)``, which guarantees
    ``value >= value_opt / (1 + tol)``.  With ``delete`` the rows that
    provably carry no optimal weight are dropped along the way; the stopping
    certificate is always verified on the full set.
    """
    X = as_matrix(F)
    n, m = X.shape
    if np.linalg.matrix_rank(X) < m:
        raise SingularUniverseError("M(F) is singular; approximate design undefined")
    live = np.arange(n)
    w = np.full(n, 1.0 / n)
    iters = 0
    gap = np.inf
    while iters < max_iter:
        iters += 1
        try:
            h, _ = _leverages(X[live], w)
        except np.linalg.LinAlgError:
            raise SingularUniverseError("information matrix of the design became singular")
        hmax = float(h.max())
        gap = hmax / m - 1.0
        if gap <= tol:
            full = np.zeros(n)
            full[live] = w
            hf, _ = _leverages(X, full)
            if float(hf.max()) <= m * (1.0 + tol):
                break
            # a deleted row violates the certificate: restart it with small mass
            bad = np.setdiff1d(np.flatnonzero(hf > m * (1.0 + tol)), live)
            live = np.union1d(live, bad)
            full[bad] = 1.0 / n
            w = full[live] / full[live].sum()
            delete = False
            continue
        if delete:
            keep = h >= _deletion_threshold(hmax - m, m)
            if not keep.all():
                live, w, h = live[keep], w[keep], h[keep]
                w = w / w.sum()
        w = w * h / m
        w /= w.sum()
    else:
        raise ConvergenceError(gap=gap, iterations=iters)
    full = np.zeros(n)
    full[live] = w
    full[full < 1e-14] = 0.0
    full /= full.sum()
    hf, logdet = _leverages(X, full)
    return ApproximateDesign(full, float(np.exp(logdet / m)), float(hf.max()), hf, iters)


@dataclass
class EfficiencyReport:
    phi: float
    phi_star_s: float
    eff_lower: float
    phi_opt: float | None = None
    eff_exact: float | None = None

    def to_dict(self) -> dict:
        keys = ("phi", "phi_opt", "phi_star_s", "eff_exact", "eff_lower")
        return {k: getattr(self, k) for k in keys if getattr(self, k) is not None}


def efficiency_report(F, S, s: int | None = None, with_oracle: bool = False,
                      tol: float = 1e-5, design: ApproximateDesign | None = None,
                      phi_opt: float | None = None) -> EfficiencyReport:
    """D-efficiency of subset ``S`` against the bound ``s * value(xi*)``.

    ``phi_star_s`` uses :attr:`ApproximateDesign.upper_value`, so
    ``eff_lower`` never exceeds the exact efficiency.  ``design`` and
    ``phi_opt`` may be passed in to reuse earlier solves.
    """
    X = as_matrix(F)
    idx = check_subset(X.shape[0], S)
    s = len(idx) if s is None else int(s)
    if len(idx) != s:
        raise DSubsetError(f"subset has {len(idx)} elements, expected {s}")
    phi = criterion_value(info_matrix(X, idx), "D")
    design = design or approx_design_optimum(X, tol=tol)
    phi_star = s * design.upper_value
    eff_lower = phi / phi_star
    if with_oracle and phi_opt is None:
        _, phi_opt = brute_force_optimal(X, s, "D")
    eff_exact = None
    if phi_opt is not None:
        eff_exact = phi / phi_opt if phi_opt > 0 else None
        if eff_exact is not None and not (
            eff_lower <= eff_exact * (1 + 1e-12) and eff_exact <= 1 + 1e-9
        ):
            raise DSubsetError(
                f"inconsistent efficiencies: eff_lower={eff_lower}, eff_exact={eff_exact}"
            )
    return EfficiencyReport(phi, phi_star, eff_lower, phi_opt, eff_exact)
