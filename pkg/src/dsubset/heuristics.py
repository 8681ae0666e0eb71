"""Greedy heuristics for D-efficient (and A-efficient) saturated subsets.

Each heuristic is written as a *stepper*: an object whose :meth:`step`
adds one regressor to the current partial subset and returns
``(index, score)``, or ``None`` once no admissible regressor is left.  The
public functions run a stepper for ``m`` steps; :mod:`dsubset.strategies`
drives the same steppers for other subset sizes.

All deterministic argmax operations break ties toward the lowest row
index, treating values within a relative ``TIE_RTOL`` of the maximum as
tied.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from . import kernels
from .core import Criterion, as_matrix, leverage_scores
from .errors import RankDeficientError
from .rng import as_generator

TIE_RTOL = 1e-12
#: projected norms at or below ``RANK_RTOL * (largest row norm)`` count as zero
RANK_RTOL = 1e-13
KYM_MAX_RESAMPLE = 100
KYM_DIRECTION_TOL = 1e-12


@dataclass(frozen=True)
class HeuristicConfig:
    """Tuning parameters shared by the heuristics.

    ``delta`` is the RGH ridge, ``alpha`` the randomized-GKM exponent.
    """

    delta: float = 1e-4
    alpha: float = 4.0
    seed: int = 0
    criterion: str = "D"

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "criterion", Criterion.parse(self.criterion).value)


@dataclass
class SelectionTrace:
    """Output of a selection run."""

    subset: tuple[int, ...]
    step_values: np.ndarray
    elapsed: float = 0.0
    method: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.subset = tuple(int(i) for i in self.subset)
        self.step_values = np.asarray(self.step_values, dtype=float)
        if len(self.step_values) != len(self.subset):
            raise ValueError("step_values and subset lengths differ")

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "indices": list(self.subset),
            "step_values": [float(v) for v in self.step_values],
        }
        for key, val in self.info.items():
            out[key] = val.tolist() if isinstance(val, np.ndarray) else val
        return out


def _mask(n: int, exclude=()) -> np.ndarray:
    active = np.ones(n, dtype=np.uint8)
    if len(exclude):
        active[np.asarray(list(exclude), dtype=np.intp)] = 0
    return active


class _ProjectionState:
    """Successive projection of all rows onto the complement of the span."""

    def __init__(self, X: np.ndarray, active: np.ndarray):
        self.W = np.array(X, dtype=np.float64, order="C", copy=True)
        self.v2 = np.einsum("ij,ij->i", self.W, self.W)
        self.active = active
        live = self.v2[active.view(bool)]
        top = float(live.max()) if live.size else 0.0
        self.threshold = (RANK_RTOL**2) * top
        self.basis: list[np.ndarray] = []

    def admissible(self) -> np.ndarray:
        return self.active.view(bool) & (self.v2 > self.threshold)

    def accept(self, j: int, update: bool) -> float:
        """Mark row ``j`` selected, return its squared projected norm."""
        pivot = self.W[j].copy()
        for q in self.basis:
            pivot -= (q @ pivot) * q
        norm2 = float(pivot @ pivot)
        self.active[j] = 0
        self.basis.append(pivot / np.sqrt(norm2))
        if update:
            kernels.project_out(self.W, pivot, self.v2, self.active)
        return norm2


class GKMStepper:
    """Efficient Galil-Kiefer method: largest projected squared norm."""

    randomized = False

    def __init__(self, X, active, cfg=None, rng=None):
        self.state = _ProjectionState(X, active)

    def step(self, update=True):
        st = self.state
        j = kernels.masked_argmax(st.v2, st.active, TIE_RTOL)
        if j < 0 or st.v2[j] <= st.threshold:
            return None
        return j, st.accept(j, update)


class RandomizedGKMStepper:
    """GKM with picks drawn proportionally to ``(projected norm^2)**alpha``."""

    randomized = True

    def __init__(self, X, active, cfg, rng):
        self.state = _ProjectionState(X, active)
        self.alpha = cfg.alpha
        self.rng = rng

    def step(self, update=True):
        st = self.state
        cand = np.flatnonzero(st.admissible())
        if cand.size == 0:
            return None
        logv = np.log(st.v2[cand])
        w = np.exp(self.alpha * (logv - logv.max()))
        c = np.cumsum(w)
        k = int(np.searchsorted(c, self.rng.random() * c[-1], side="right"))
        j = int(cand[min(k, cand.size - 1)])
        return j, st.accept(j, update)


class KYMStepper:
    """Modified Kumar-Yildirim method: argmax ``|f'b|`` for random ``b``.

    ``P`` is the projector onto the complement of the current span, updated
    by ``P <- P - g g'/(g'g)`` with ``g = P f`` (applied twice for stability).
    """

    randomized = True

    def __init__(self, X, active, cfg, rng):
        self.X = X
        self.active = active
        self.rng = rng
        m = X.shape[1]
        self.P = np.eye(m)
        self.rank = 0
        self.left = min(m, int(np.count_nonzero(active)))
        self.scores = np.empty(X.shape[0])
        self.threshold = None

    def step(self, update=True):
        m = self.X.shape[1]
        if self.rank >= self.left:
            return None
        for _ in range(KYM_MAX_RESAMPLE):
            z = self.rng.standard_normal(m)
            b = self.P @ z
            nb2 = b @ b
            if nb2 < KYM_DIRECTION_TOL**2 * (z @ z):
                continue
            # scores of the unnormalized direction; rescaled for the pick only
            kernels.abs_dot(self.X, b, self.scores)
            j = kernels.masked_argmax(self.scores, self.active, TIE_RTOL)
            if j < 0:
                return None
            score = float(self.scores[j]) / np.sqrt(nb2)
            if self.threshold is None:
                # first direction is unrestricted, so its top score fixes the scale
                self.threshold = RANK_RTOL * score
            if score > self.threshold:
                break
        else:
            return None
        self.active[j] = 0
        if update:
            g = self.P @ (self.P @ self.X[j])
            self.P -= g[:, None] * (g / (g @ g))
        self.rank += 1
        return j, score


class RGHStepper:
    """Regularized greedy heuristic: argmax ``f'(M + delta I)^{-1} f``."""

    randomized = False

    def __init__(self, X, active, cfg, rng=None):
        self.X = X
        self.active = active
        self.delta = cfg.delta
        m = X.shape[1]
        self.M = np.zeros((m, m))

    def step(self, update=True):
        if not self.active.any():
            return None
        m = self.M.shape[0]
        L = sla.cholesky(self.M + self.delta * np.eye(m), lower=True, check_finite=False)
        Y = sla.solve_triangular(L, self.X.T, lower=True, check_finite=False)
        scores = np.ascontiguousarray(np.einsum("ij,ij->j", Y, Y))
        j = kernels.masked_argmax(scores, self.active, TIE_RTOL)
        f = self.X[j]
        self.M += np.outer(f, f)
        self.active[j] = 0
        return j, float(scores[j])


class GKMAStepper:
    """GKM for A-optimality: argmax ``f'(I - P)f / (1 + f'M^+ f)``."""

    randomized = False

    def __init__(self, X, active, cfg=None, rng=None):
        self.X = X
        self.state = _ProjectionState(X, active)
        m = X.shape[1]
        self.M = np.zeros((m, m))
        self.rank = 0

    def pinv_quadratic(self) -> np.ndarray:
        """``f_i' M^+ f_i`` for every row (M^+ from an eigendecomposition)."""
        if self.rank == 0:
            return np.zeros(self.X.shape[0])
        lam, U = np.linalg.eigh(self.M)
        lam, U = lam[-self.rank:], U[:, -self.rank:]
        Y = (self.X @ U) / np.sqrt(lam)
        return np.einsum("ij,ij->i", Y, Y)

    def ratios(self) -> np.ndarray:
        st = self.state
        ok = st.admissible()
        r = np.full(self.X.shape[0], -np.inf)
        r[ok] = st.v2[ok] / (1.0 + self.pinv_quadratic()[ok])
        return r

    def step(self, update=True):
        st = self.state
        ok = st.admissible()
        if not ok.any():
            return None
        r = self.ratios()
        j = kernels.masked_argmax(r, ok.view(np.uint8), TIE_RTOL)
        ratio = float(r[j])
        f = self.X[j]
        self.M += np.outer(f, f)
        self.rank += 1
        st.accept(j, update)
        return j, ratio


class RNDStepper:
    """Uniform random pick among the remaining rows."""

    randomized = True

    def __init__(self, X, active, cfg=None, rng=None):
        self.active = active
        self.rng = rng
        self.left = int(active.sum())

    def step(self, update=True):
        if self.left == 0:
            return None
        n = self.active.shape[0]
        if 4 * self.left >= n:
            while True:
                j = int(self.rng.integers(n))
                if self.active[j]:
                    break
        else:
            cand = np.flatnonzero(self.active)
            j = int(cand[self.rng.integers(cand.size)])
        prob = 1.0 / self.left
        self.active[j] = 0
        self.left -= 1
        return j, prob


class RNDLeverageStepper:
    """Random pick with probability proportional to full-set leverage."""

    randomized = True
    max_rejections = 64

    def __init__(self, X, active, cfg=None, rng=None, scores=None):
        self.h = leverage_scores(X) if scores is None else scores
        self.cum = np.cumsum(self.h)
        self.active = active
        self.rng = rng
        self.mass = float(self.h[active.view(bool)].sum())

    def step(self, update=True):
        if not self.mass > 0:
            return None
        total = self.cum[-1]
        n = self.h.shape[0]
        for _ in range(self.max_rejections):
            j = int(np.searchsorted(self.cum, self.rng.random() * total, side="right"))
            j = min(j, n - 1)
            if self.active[j] and self.h[j] > 0:
                break
        else:
            w = np.where(self.active.view(bool), self.h, 0.0)
            c = np.cumsum(w)
            j = int(np.searchsorted(c, self.rng.random() * c[-1], side="right"))
            j = min(j, n - 1)
        prob = float(self.h[j]) / self.mass
        self.active[j] = 0
        self.mass -= float(self.h[j])
        return j, prob


STEPPERS: dict[str, Callable] = {
    "rnd": RNDStepper,
    "rndl": RNDLeverageStepper,
    "rgh": RGHStepper,
    "gkm": GKMStepper,
    "gkmr": RandomizedGKMStepper,
    "kym": KYMStepper,
    "gkma": GKMAStepper,
}
RANDOMIZED = frozenset(k for k, v in STEPPERS.items() if v.randomized)


def run_stepper(stepper, steps: int, strict: bool = True):
    """Take up to ``steps`` picks; returns (indices, values).

    With ``strict`` an exhausted stepper raises :class:`RankDeficientError`.
    """
    idx, vals = [], []
    for k in range(steps):
        got = stepper.step(update=k + 1 < steps)
        if got is None:
            if strict:
                raise RankDeficientError(rank=len(idx), needed=steps)
            break
        idx.append(got[0])
        vals.append(got[1])
    return idx, vals


def select(method: str, F, cfg: HeuristicConfig | None = None, rng=None) -> SelectionTrace:
    """Run heuristic ``method`` (a key of :data:`STEPPERS`) for ``m`` steps."""
    try:
        factory = STEPPERS[method]
    except KeyError:
        raise ValueError(f"unknown heuristic {method!r}; choose from {sorted(STEPPERS)}") from None
    cfg = cfg or HeuristicConfig()
    gen = as_generator(rng) if factory.randomized else None
    X = as_matrix(F)
    t0 = time.perf_counter()
    stepper = factory(X, _mask(X.shape[0]), cfg, gen)
    # random samplers and RGH never certify rank; they may return singular sets
    strict = method in ("gkm", "gkmr", "kym", "gkma")
    idx, vals = run_stepper(stepper, X.shape[1], strict=strict)
    elapsed = time.perf_counter() - t0
    return SelectionTrace(idx, vals, elapsed, method)


def rnd_saturated(F, rng=None) -> SelectionTrace:
    """``m`` rows uniformly at random without replacement."""
    return select("rnd", F, rng=rng)


def rnd_leverage_saturated(F, rng=None) -> SelectionTrace:
    """``m`` rows drawn sequentially with probabilities proportional to leverage."""
    return select("rndl", F, rng=rng)


def rgh(F, cfg: HeuristicConfig | None = None, *, delta: float | None = None) -> SelectionTrace:
    """Regularized greedy heuristic with ridge ``delta``."""
    if delta is not None:
        cfg = HeuristicConfig(delta=delta)
    return select("rgh", F, cfg)


def gkm(F) -> SelectionTrace:
    """Efficient Galil-Kiefer method.

    Picks the row with the largest squared norm, projects every row onto the
    orthogonal complement of the pick and repeats.  ``step_values`` holds the
    selected squared projected norms, whose product is ``det M(S)``.

    Raises
    ------
    RankDeficientError
        If ``F`` does not have full column rank.
    """
    return select("gkm", F)


def gkm_randomized(F, cfg: HeuristicConfig | None = None, rng=None, *,
                   alpha: float | None = None) -> SelectionTrace:
    if alpha is not None:
        cfg = HeuristicConfig(alpha=alpha)
    return select("gkmr", F, cfg, rng)


def kym(F, rng=None) -> SelectionTrace:
    """Modified Kumar-Yildirim method.

    At every step a direction ``b`` is drawn isotropically from the orthogonal
    complement of the current span and the row maximizing ``|f'b|`` is added.
    """
    return select("kym", F, rng=rng)


def gkm_a_opt(F) -> SelectionTrace:
    """Galil-Kiefer method adapted to A-optimality."""
    return select("gkma", F)
