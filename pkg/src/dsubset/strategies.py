"""Composite strategies built on the single-subset heuristics.

* :func:`general_size` -- subsets of any size ``s`` (optionally in batches),
* :func:`preselect` -- run a heuristic on a random ``k*m`` sub-universe,
* :func:`multi_run` -- best of many independent randomized runs.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import RegressorSet, as_matrix, criterion_value, info_matrix
from .errors import AllRunsSingularError, InfeasibleSizeError, RankDeficientError
from .heuristics import (
    RANDOMIZED, STEPPERS, HeuristicConfig, SelectionTrace, _mask, run_stepper,
)
from .rng import as_generator, stream


@dataclass(frozen=True)
class StrategyConfig:
    """Parameters of the composite strategies.

    ``base`` names a heuristic from :data:`dsubset.heuristics.STEPPERS`; the
    suffix ``f`` (``"gkmf"``, ``"kymf"``) wraps it in pre-selection with
    multiplier ``k``.  ``runs`` and ``time_budget`` bound :func:`multi_run`.
    """

    base: str = "gkm"
    s: int | None = None
    b: int = 1
    k: int = 50
    runs: int | None = None
    time_budget: float | None = None
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)

    def __post_init__(self):
        name = self.base[:-1] if self.preselected else self.base
        if name not in STEPPERS:
            raise ValueError(f"unknown base heuristic {self.base!r}")
        if self.s is not None and self.s < 1:
            raise ValueError("s must be >= 1")
        if self.b < 1 or (self.s is not None and self.b > self.s):
            raise ValueError("batch size must satisfy 1 <= b <= s")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def preselected(self) -> bool:
        return self.base.endswith("f") and self.base[:-1] in STEPPERS

    @property
    def heuristic_name(self) -> str:
        return self.base[:-1] if self.preselected else self.base


def general_size(F, cfg: StrategyConfig, rng=None) -> SelectionTrace:
    """Greedy subset of size ``cfg.s`` assembled in saturated passes.

    Each pass runs a fresh base heuristic on the rows not selected so far
    and takes at most ``m`` picks; batches of ``cfg.b`` picks are taken in
    sequence within a pass.  For ``s < m`` this is a premature stop.
    """
    X = as_matrix(F)
    n, m = X.shape
    s = m if cfg.s is None else cfg.s
    if s > n:
        raise InfeasibleSizeError(f"cannot select {s} of {n} regressors")
    name = cfg.heuristic_name
    factory = STEPPERS[name]
    gen = as_generator(rng) if factory.randomized else None
    strict = name in ("gkm", "gkmr", "kym", "gkma")
    t0 = time.perf_counter()
    chosen: list[int] = []
    values: list[float] = []
    batches: list[int] = []
    stepper, in_pass, first_pass = None, 0, True
    while len(chosen) < s:
        a = min(s - len(chosen), cfg.b)
        batches.append(a)
        for _ in range(a):
            if stepper is None or in_pass == m:
                first_pass = stepper is None
                stepper = factory(X, _mask(n, chosen), cfg.heuristic, gen)
                in_pass = 0
            last = len(chosen) + 1 == s or in_pass + 1 == m
            got = stepper.step(update=not last)
            if got is None and not first_pass and in_pass > 0:
                stepper = factory(X, _mask(n, chosen), cfg.heuristic, gen)
                in_pass = 0
                got = stepper.step(update=not last)
            if got is None:
                if first_pass and strict:
                    raise RankDeficientError(rank=len(chosen), needed=min(s, m))
                # nothing informative left: fill with the lowest unused index
                j = int(np.flatnonzero(_mask(n, chosen))[0])
                got = (j, 0.0)
            chosen.append(got[0])
            values.append(got[1])
            in_pass += 1
    elapsed = time.perf_counter() - t0
    return SelectionTrace(chosen, values, elapsed, name, {"batches": batches})


def preselect(F, cfg: StrategyConfig, rng=None) -> SelectionTrace:
    """Run the base heuristic on a uniform random ``k*m``-row sub-universe.

    Raises
    ------
    RankDeficientError
        If the drawn sub-universe is rank deficient (the caller may retry).
    """
    X = as_matrix(F)
    n, m = X.shape
    size = cfg.k * m
    if size > n:
        raise InfeasibleSizeError(f"k*m = {size} exceeds n = {n}")
    gen = as_generator(rng)
    t0 = time.perf_counter()
    universe = np.sort(gen.choice(n, size=size, replace=False))
    name = cfg.heuristic_name
    sub = StrategyConfig(base=name, s=cfg.s, b=cfg.b, heuristic=cfg.heuristic)
    inner = general_size(X[universe], sub, gen)
    elapsed = time.perf_counter() - t0
    subset = [int(universe[i]) for i in inner.subset]
    info = {"universe": universe, **inner.info}
    return SelectionTrace(subset, inner.step_values, elapsed, name + "f", info)


def run_strategy(F, cfg: StrategyConfig, rng=None) -> SelectionTrace:
    """Dispatch to :func:`preselect` or :func:`general_size`."""
    if cfg.preselected:
        return preselect(F, cfg, rng)
    return general_size(F, cfg, rng)


@dataclass
class Profile:
    """Running best value of a multi-run, one row per run."""

    run_index: list[int] = field(default_factory=list)
    cumulative_seconds: list[float] = field(default_factory=list)
    best_value: list[float] = field(default_factory=list)
    best_efficiency: list[float | None] = field(default_factory=list)

    def rows(self):
        return list(zip(self.run_index, self.cumulative_seconds,
                        self.best_value, self.best_efficiency))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["run_index", "cumulative_seconds", "best_value",
                        "best_efficiency_if_known"])
            for r, t, v, e in self.rows():
                w.writerow([r, repr(t), repr(v), "" if e is None else repr(e)])


def _one_run(X, cfg, seed, i):
    t0 = time.perf_counter()
    try:
        trace = run_strategy(X, cfg, stream(seed, i))
        value = criterion_value(info_matrix(X, trace.subset), cfg.heuristic.criterion)
    except RankDeficientError:
        trace, value = None, 0.0
    return trace, value, time.perf_counter() - t0


def multi_run(F, cfg: StrategyConfig, seed: int = 0, reference: float | None = None,
              threads: int = 1):
    """Best of independent runs of a randomized strategy.

    Run ``i`` uses the stream ``stream(seed, i)``.  Runs continue until
    ``cfg.runs`` runs are done or ``cfg.time_budget`` seconds have elapsed
    (checked between runs, at least one run).  The time of a run includes
    evaluating its criterion value.  ``reference`` (e.g. a known optimum)
    turns best values into efficiencies in the profile.

    Returns
    -------
    (SelectionTrace, Profile)

    Raises
    ------
    AllRunsSingularError
        If no run produced a nonsingular subset.
    """
    if cfg.heuristic_name not in RANDOMIZED and not cfg.preselected:
        raise ValueError(f"multi-run needs a randomized heuristic, got {cfg.base!r}")
    if cfg.runs is None and cfg.time_budget is None:
        raise ValueError("multi_run needs a run count or a time budget")
    X = F if isinstance(F, RegressorSet) else RegressorSet(F)
    profile = Profile()
    best = (0.0, None, None)          # (value, run index, trace)
    clock = 0.0

    def record(i, trace, value, dt):
        nonlocal best, clock
        clock += dt
        if value > best[0]:
            best = (value, i, trace)
        profile.run_index.append(i)
        profile.cumulative_seconds.append(clock)
        profile.best_value.append(best[0])
        profile.best_efficiency.append(None if reference is None else best[0] / reference)

    if cfg.time_budget is None and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = pool.map(lambda i: _one_run(X, cfg, seed, i), range(cfg.runs))
            for i, (trace, value, dt) in enumerate(results):
                record(i, trace, value, dt)
    else:
        i = 0
        while True:
            record(i, *_one_run(X, cfg, seed, i))
            i += 1
            if cfg.runs is not None and i >= cfg.runs:
                break
            if cfg.time_budget is not None and clock >= cfg.time_budget:
                break
    if best[2] is None:
        raise AllRunsSingularError(len(profile.run_index))
    value, i, trace = best
    trace.info = {**trace.info, "best_run": i, "best_value": value,
                  "runs": len(profile.run_index)}
    return trace, profile
