"""Instance generators, benchmark harness and Monte-Carlo checks."""
from __future__ import annotations

import contextlib
import csv
import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from .core import DET_RTOL, RegressorSet, as_matrix, d_criterion, info_matrix
from .errors import DSubsetError, InstanceTooLargeError
from .evaluation import BRUTE_FORCE_LIMIT, approx_design_optimum, brute_force_optimal
from .heuristics import HeuristicConfig
from .rng import stream
from .strategies import StrategyConfig, multi_run, run_strategy

#: benchmark method label -> strategy base name
METHODS = {
    "RND": "rnd", "RNDl": "rndl", "RGH": "rgh", "GKM": "gkm", "GKMr": "gkmr",
    "KYM": "kym", "GKMf": "gkmf", "KYMf": "kymf",
}
DEFAULT_REPETITIONS = 21
RESULT_COLUMNS = ["method", "kind", "n", "m", "seed", "rep", "elapsed_s", "phi",
                  "eff_lower", "eff_exact", "singular"]
PROFILE_COLUMNS = ["run_index", "cumulative_s", "best_eff"]


def canonical_method(name: str) -> str:
    for label in METHODS:
        if label.lower() == name.lower():
            return label
    raise ValueError(f"unknown method {name!r}; choose from {list(METHODS)}")


# -- instances ---------------------------------------------------------------

def gen_wishart_normal(n: int, d: int, rng, return_cov: bool = False):
    """Lifted normal regressors ``(x_i', 1)'`` with covariance from Wishart.

    ``Sigma = G'G`` for a ``d x d`` standard-normal ``G`` and ``x_i' = z_i' G``
    so that ``x_i ~ N(0, Sigma)``.
    """
    if d < 1 or n < d + 1:
        raise ValueError(f"need d >= 1 and n >= d + 1, got n={n}, d={d}")
    G = rng.standard_normal((d, d))
    Z = rng.standard_normal((n, d))
    F = np.empty((n, d + 1))
    np.matmul(Z, G, out=F[:, :d])
    F[:, d] = 1.0
    if return_cov:
        return F, G.T @ G
    return F


def gen_hypercube(m: int) -> np.ndarray:
    """All ``2**m`` vectors of ``{-1, 1}**m`` in lexicographic order."""
    if not 2 <= m <= 20:
        raise ValueError(f"hypercube dimension must be in [2, 20], got {m}")
    return np.array(list(itertools.product((-1.0, 1.0), repeat=m)))


def read_matrix(path, header: bool = False) -> np.ndarray:
    """Headerless CSV, one regressor per line."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read regressor matrix {path}: {exc}") from exc
    except ValueError as exc:
        raise ValueError(f"malformed regressor matrix {path}: {exc}") from exc
    return data


@contextlib.contextmanager
def _sink(target, what: str):
    """Yield a text handle for a path or pass an open handle through."""
    if hasattr(target, "write"):
        yield target
        return
    try:
        with open(target, "w", newline="") as fh:
            yield fh
    except OSError as exc:
        raise OSError(f"cannot write {what} to {target}: {exc}") from exc


def write_matrix(target, F) -> None:
    with _sink(target, "regressor matrix") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(F):
            w.writerow([repr(float(x)) for x in row])


@dataclass(frozen=True)
class InstanceSpec:
    """What to benchmark on: ``wishart_normal``, ``hypercube`` or ``csv_file``."""

    kind: str
    n: int | None = None
    d: int | None = None
    m: int | None = None
    seed: int = 0
    path: str | None = None
    header: bool = False

    def __post_init__(self):
        if self.kind == "wishart_normal":
            if self.n is None or self.d is None or self.n < self.d + 1 or self.d < 1:
                raise ValueError("wishart_normal needs n >= d + 1 >= 2")
        elif self.kind == "hypercube":
            if self.m is None:
                raise ValueError("hypercube needs m")
        elif self.kind == "csv_file":
            if not self.path:
                raise ValueError("csv_file needs a path")
        else:
            raise ValueError(f"unknown instance kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "InstanceSpec":
        """Parse ``wishart:n=1000,d=10[,seed=3]``, ``hypercube:m=8`` or
        ``csv:path=F.csv[,header=1]``."""
        kind, _, rest = text.partition(":")
        kinds = {"wishart": "wishart_normal", "wishart_normal": "wishart_normal",
                 "hypercube": "hypercube", "csv": "csv_file", "csv_file": "csv_file"}
        if kind not in kinds:
            raise ValueError(f"unknown instance kind in {text!r}")
        kw: dict = {"seed": seed}
        for item in filter(None, rest.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"malformed spec item {item!r} in {text!r}")
            if key in ("n", "d", "m", "seed"):
                kw[key] = int(float(val))
            elif key == "path":
                kw["path"] = val
            elif key == "header":
                kw["header"] = val not in ("0", "false", "False", "")
            else:
                raise ValueError(f"unknown spec key {key!r} in {text!r}")
        return cls(kinds[kind], **kw)

    def build(self) -> np.ndarray:
        if self.kind == "wishart_normal":
            return gen_wishart_normal(self.n, self.d, stream(self.seed, "instance"))
        if self.kind == "hypercube":
            return gen_hypercube(self.m)
        return read_matrix(self.path, self.header)


def known_optimum(spec: InstanceSpec, F: np.ndarray, exact_limit: int) -> float | None:
    """Exact optimal saturated D-value when cheaply available.

    On ``{-1,1}^m`` with a Hadamard matrix of order ``m`` (m = 2 or a multiple
    of 4; all such orders up to 664 are known) the optimum is ``m``.
    """
    n, m = F.shape
    if spec.kind == "hypercube" and (m == 2 or m % 4 == 0):
        return float(m)
    if math.comb(n, m) <= exact_limit:
        return brute_force_optimal(F, m)[1]
    return None


# -- singular-subset probability ---------------------------------------------

def _singular_flags(X: np.ndarray, combos: np.ndarray, integral: bool) -> np.ndarray:
    rows = X[combos]
    det = np.linalg.det(rows)
    if integral:
        return np.abs(det) < 0.5
    m = X.shape[1]
    scale = (np.einsum("nij,nij->n", rows, rows) / m) ** m
    return det * det < DET_RTOL * scale


def singular_probability(F, s: int | None = None, mode: str = "exact",
                         trials: int = 10**6, rng=None, chunk: int = 1 << 16):
    """Probability that a uniform random ``s``-subset is singular.

    ``mode="exact"`` enumerates all subsets and returns a :class:`Fraction`;
    ``mode="monte_carlo"`` returns the fraction of singular draws.  Only
    saturated subsets (``s = m``) are supported.  For integer-valued ``F``
    the determinant is integral, so singularity is decided exactly.
    """
    X = as_matrix(F)
    n, m = X.shape
    s = m if s is None else s
    if s != m:
        raise ValueError("singular_probability supports saturated subsets only")
    integral = bool(np.all(X == np.round(X))) and m <= 20
    if mode == "exact":
        total = math.comb(n, s)
        if total > BRUTE_FORCE_LIMIT:
            raise InstanceTooLargeError(f"C({n}, {s}) = {total} exceeds {BRUTE_FORCE_LIMIT}")
        it = itertools.combinations(range(n), s)
        singular = 0
        while True:
            flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, chunk)),
                               dtype=np.intp)
            if flat.size == 0:
                break
            singular += int(_singular_flags(X, flat.reshape(-1, s), integral).sum())
        return Fraction(singular, total)
    if mode != "monte_carlo":
        raise ValueError(f"unknown mode {mode!r}")
    gen = rng if isinstance(rng, np.random.Generator) else stream(0 if rng is None else rng)
    singular = done = 0
    while done < trials:
        batch = min(chunk, trials - done)
        # uniform over ordered draws with distinct entries == uniform over subsets
        draws = gen.integers(n, size=(2 * batch + 64, s))
        srt = np.sort(draws, axis=1)
        draws = draws[np.all(srt[:, 1:] != srt[:, :-1], axis=1)][:batch]
        singular += int(_singular_flags(X, draws, integral).sum())
        done += draws.shape[0]
    return singular / done


# -- benchmark harness -------------------------------------------------------

@dataclass
class BenchResult:
    method: str
    kind: str
    n: int
    m: int
    seed: int
    rep: int
    elapsed_s: float
    phi: float
    eff_lower: float
    eff_exact: float | None
    singular: bool


def write_results(target, results) -> None:
    with _sink(target, "results") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in results:
            w.writerow([
                r.method, r.kind, r.n, r.m, r.seed, r.rep,
                repr(float(r.elapsed_s)), repr(float(r.phi)), repr(float(r.eff_lower)),
                "" if r.eff_exact is None else repr(float(r.eff_exact)),
                int(r.singular),
            ])


def read_results(path) -> list[BenchResult]:
    conv = {"n": int, "m": int, "seed": int, "rep": int, "elapsed_s": float,
            "phi": float, "eff_lower": float,
            "eff_exact": lambda v: None if v == "" else float(v),
            "singular": lambda v: bool(int(v))}
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
    names = [f.name for f in fields(BenchResult)]
    return [BenchResult(**{k: conv.get(k, str)(row[k]) for k in names}) for row in rows]


def _strategy(label: str, k: int, hcfg: HeuristicConfig) -> StrategyConfig:
    return StrategyConfig(base=METHODS[label], k=k, heuristic=hcfg)


def _run_cell(X, cfg: StrategyConfig, seed, spec_index, label, rep):
    rng = stream(seed, spec_index, label, rep)
    t0 = time.perf_counter()
    try:
        trace = run_strategy(X, cfg, rng)
    except DSubsetError:
        trace = None
    elapsed = time.perf_counter() - t0
    return trace, elapsed


def run_benchmark(specs, methods, repetitions: int = DEFAULT_REPETITIONS, out=None,
                  seed: int = 0, k: int = 50, delta: float = 1e-4, alpha: float = 4.0,
                  threads: int | None = None, exact_limit: int = 10**5,
                  tol: float = 1e-5) -> list[BenchResult]:
    """Time every ``method x spec x repetition`` cell and score its subset.

    Only the selection is timed; instance generation, the approximate-design
    bound and the exact optimum are computed outside the clock.  Cell
    ``(spec i, method, rep)`` draws from ``stream(seed, i, method, rep)``.
    ``eff_exact`` is filled when the optimum is known (Hadamard hypercubes) or
    enumeration needs at most ``exact_limit`` subsets.
    """
    labels = [canonical_method(mth) for mth in methods]
    hcfg = HeuristicConfig(delta=delta, alpha=alpha, seed=seed)
    threads = threads or os.cpu_count() or 1
    results: list[BenchResult] = []
    for si, spec in enumerate(specs):
        # validated once here so that the timed cells skip the input checks
        X = RegressorSet(spec.build())
        n, m = X.n, X.m
        phi_star = m * approx_design_optimum(X, tol=tol).upper_value
        phi_opt = known_optimum(spec, X.data, exact_limit)
        cells = [(label, rep) for label in labels for rep in range(repetitions)]
        cfgs = {label: _strategy(label, k, hcfg) for label in labels}

        def work(cell):
            label, rep = cell
            return _run_cell(X, cfgs[label], seed, si, label, rep)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                outs = list(pool.map(work, cells))
        else:
            outs = [work(c) for c in cells]
        for (label, rep), (trace, elapsed) in zip(cells, outs):
            phi = 0.0 if trace is None else d_criterion(info_matrix(X, trace.subset))
            results.append(BenchResult(
                label, spec.kind, n, m, seed, rep, elapsed, phi, phi / phi_star,
                None if phi_opt is None else phi / phi_opt, phi == 0.0,
            ))
    if out is not None:
        write_results(out, results)
    return results


def run_profile(spec: InstanceSpec, method: str, time_budget: float, seed: int = 0,
                out=None, k: int = 50, alpha: float = 4.0, tol: float = 1e-5,
                exact_limit: int = 10**5):
    """Time profile of the best efficiency found by repeated runs.

    Returns rows ``(run_index, cumulative_s, best_eff)``; efficiencies are
    against the exact optimum when known, else against ``m * value(xi*)``.
    """
    label = canonical_method(method)
    X = RegressorSet(spec.build())
    m = X.m
    ref = known_optimum(spec, X.data, exact_limit)
    if ref is None:
        ref = m * approx_design_optimum(X, tol=tol).upper_value
    cfg = StrategyConfig(base=METHODS[label], k=k, time_budget=time_budget,
                         heuristic=HeuristicConfig(alpha=alpha, seed=seed))
    _, profile = multi_run(X, cfg, seed=seed, reference=ref)
    rows = [(i, t, e) for i, t, _, e in profile.rows()]
    if out is not None:
        write_profile(out, rows)
    return rows


def write_profile(target, rows) -> None:
    with _sink(target, "profile") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_COLUMNS)
        for i, t, e in rows:
            w.writerow([i, repr(float(t)), repr(float(e))])


def read_profile(path):
    with open(path, newline="") as fh:
        return [(int(r["run_index"]), float(r["cumulative_s"]), float(r["best_eff"]))
                for r in csv.DictReader(fh)]


def plot_data(results, log_time: bool = True):
    """Per-cell ``(method, n, m, time, eff)`` rows for plotting.

    Times are decadic logarithms of seconds when ``log_time`` is set; stored
    results always keep raw seconds.
    """
    out = []
    for r in results:
        t = math.log10(r.elapsed_s) if log_time and r.elapsed_s > 0 else r.elapsed_s
        eff = r.eff_exact if r.eff_exact is not None else r.eff_lower
        out.append((r.method, r.n, r.m, t, eff))
    return out
