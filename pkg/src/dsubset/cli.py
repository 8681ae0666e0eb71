"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 computation or I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench
from .core import Criterion, criterion_value, info_matrix
from .errors import DSubsetError
from .evaluation import efficiency_report
from .heuristics import HeuristicConfig
from .rng import stream
from .strategies import StrategyConfig, run_strategy

SELECT_METHODS = ["rnd", "rndl", "rgh", "gkm", "gkmr", "kym", "gkma"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, out_help: str = "output path (default: stdout)"):
    p.add_argument("--seed", type=int, default=0, help="master random seed (default: 0)")
    p.add_argument("--out", default=None, metavar="PATH", help=out_help)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dsubset",
                     description="Greedy construction of D-efficient subsets of regressors.")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", help="write a regressor matrix as headerless CSV")
    g.add_argument("--kind", choices=["wishart", "hypercube"], required=True,
                   help="lifted Wishart-normal rows or the full {-1,1}^m cube")
    g.add_argument("--n", type=int, help="number of regressors (wishart)")
    g.add_argument("--d", type=int, help="covariate dimension, m = d + 1 (wishart)")
    g.add_argument("--m", type=int, help="dimension (hypercube)")
    _common(g)

    s = sub.add_parser("select", help="select a subset and write its JSON trace")
    s.add_argument("--method", choices=SELECT_METHODS, default="gkm",
                   help="heuristic (default: gkm)")
    s.add_argument("--in", dest="inp", metavar="CSV", required=True,
                   help="regressor matrix file")
    s.add_argument("--header", action="store_true", help="skip the first CSV line")
    s.add_argument("--criterion", choices=["d", "a"], default="d",
                   help="criterion; 'a' with gkm runs the A-optimality variant")
    s.add_argument("--delta", type=float, default=1e-4, help="RGH ridge (default: 1e-4)")
    s.add_argument("--alpha", type=float, default=4.0,
                   help="randomized-GKM exponent (default: 4)")
    s.add_argument("--k", type=int, default=None,
                   help="pre-select k*m random rows first (gkm/kym)")
    s.add_argument("--size", type=int, default=None, help="subset size s (default: m)")
    s.add_argument("--batch", type=int, default=1, help="batch size b (default: 1)")
    _common(s)

    e = sub.add_parser("evaluate", help="efficiency report of a subset as JSON")
    e.add_argument("--in", dest="inp", metavar="CSV", required=True,
                   help="regressor matrix file")
    e.add_argument("--header", action="store_true", help="skip the first CSV line")
    e.add_argument("--subset", required=True, metavar="SUBSET",
                   help="JSON trace from 'select' or comma-separated indices")
    e.add_argument("--oracle", action="store_true", help="also run the exhaustive optimum")
    e.add_argument("--tol", type=float, default=1e-5,
                   help="approximate-design tolerance (default: 1e-5)")
    _common(e)

    b = sub.add_parser("bench", help="benchmark heuristics, CSV results")
    b.add_argument("--spec", action="append", required=True, metavar="SPEC",
                   help="instance, e.g. wishart:n=100000,d=10 or hypercube:m=8 (repeatable)")
    b.add_argument("--methods", default="gkm,kym,rnd",
                   help="comma-separated subset of " + ",".join(bench.METHODS))
    b.add_argument("--reps", type=int, default=bench.DEFAULT_REPETITIONS,
                   help=f"repetitions per cell (default: {bench.DEFAULT_REPETITIONS})")
    b.add_argument("--delta", type=float, default=1e-4, help="RGH ridge (default: 1e-4)")
    b.add_argument("--alpha", type=float, default=4.0, help="GKMr exponent (default: 4)")
    b.add_argument("--k", type=int, default=50, help="pre-selection factor (default: 50)")
    b.add_argument("--tol", type=float, default=1e-5,
                   help="approximate-design tolerance (default: 1e-5)")
    b.add_argument("--threads", type=int, default=None,
                   help="parallel cells (default: available cores)")
    _common(b)

    p = sub.add_parser("profile", help="multi-run time profile, CSV")
    p.add_argument("--spec", required=True, metavar="SPEC", help="instance, as for bench")
    p.add_argument("--method", default="GKMr", help="randomized method (default: GKMr)")
    p.add_argument("--budget", type=float, default=1.0, help="seconds (default: 1)")
    p.add_argument("--alpha", type=float, default=4.0, help="GKMr exponent (default: 4)")
    p.add_argument("--k", type=int, default=50, help="pre-selection factor (default: 50)")
    p.add_argument("--tol", type=float, default=1e-5,
                   help="approximate-design tolerance (default: 1e-5)")
    _common(p)

    q = sub.add_parser("singular-prob",
                       help="probability that a random saturated subset is singular")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--hypercube", type=int, metavar="M", help="use {-1,1}^M")
    src.add_argument("--in", dest="inp", metavar="CSV", help="regressor matrix file")
    q.add_argument("--header", action="store_true", help="skip the first CSV line")
    mode = q.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="enumerate all subsets")
    mode.add_argument("--trials", type=int, default=10**6,
                      help="Monte-Carlo trials (default: 1000000)")
    _common(q)
    return parser


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _cmd_generate(args):
    if args.kind == "wishart":
        if args.n is None or args.d is None:
            raise UsageError("generate --kind wishart needs --n and --d")
        F = bench.gen_wishart_normal(args.n, args.d, stream(args.seed, "instance"))
    else:
        if args.m is None:
            raise UsageError("generate --kind hypercube needs --m")
        F = bench.gen_hypercube(args.m)
    bench.write_matrix(args.out or sys.stdout, F)


def _cmd_select(args):
    F = bench.read_matrix(args.inp, args.header)
    method = args.method
    if args.criterion == "a":
        if method not in ("gkm", "gkma"):
            raise UsageError("--criterion a is only available for gkm")
        method = "gkma"
    if args.k is not None:
        if method not in ("gkm", "kym"):
            raise UsageError("--k pre-selection applies to gkm and kym only")
        method += "f"
    try:
        cfg = StrategyConfig(base=method, s=args.size, b=args.batch, k=args.k or 50,
                             heuristic=HeuristicConfig(delta=args.delta, alpha=args.alpha,
                                                       seed=args.seed,
                                                       criterion=args.criterion))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    trace = run_strategy(F, cfg, stream(args.seed, "select"))
    out = trace.to_dict()
    out.pop("universe", None)
    out["phi"] = criterion_value(info_matrix(F, trace.subset), "D")
    if args.criterion == "a":
        out["phi_a"] = criterion_value(info_matrix(F, trace.subset), Criterion.A)
    _emit(_json(out), args.out)


def _parse_subset(text: str):
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)["indices"]
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--subset is neither a file nor an index list: {text!r}") from None


def _cmd_evaluate(args):
    F = bench.read_matrix(args.inp, args.header)
    S = _parse_subset(args.subset)
    rep = efficiency_report(F, S, with_oracle=args.oracle, tol=args.tol)
    _emit(_json(rep.to_dict()), args.out)


def _cmd_bench(args):
    try:
        specs = [bench.InstanceSpec.parse(s, seed=args.seed) for s in args.spec]
        methods = [bench.canonical_method(m) for m in args.methods.split(",") if m]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    results = bench.run_benchmark(specs, methods, repetitions=args.reps, seed=args.seed,
                                  k=args.k, delta=args.delta, alpha=args.alpha,
                                  threads=args.threads, tol=args.tol)
    bench.write_results(args.out or sys.stdout, results)


def _cmd_profile(args):
    try:
        spec = bench.InstanceSpec.parse(args.spec, seed=args.seed)
        bench.canonical_method(args.method)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    bench.run_profile(spec, args.method, args.budget, seed=args.seed,
                      out=args.out or sys.stdout, k=args.k, alpha=args.alpha, tol=args.tol)


def _cmd_singular_prob(args):
    if args.hypercube is not None:
        F = bench.gen_hypercube(args.hypercube)
    else:
        F = bench.read_matrix(args.inp, args.header)
    if args.exact:
        p = bench.singular_probability(F, mode="exact")
        text = f"{float(p):.6f} ({p.numerator}/{p.denominator})\n"
    else:
        p = bench.singular_probability(F, mode="monte_carlo", trials=args.trials,
                                       rng=stream(args.seed, "singular-prob"))
        text = f"{p:.6f}\n"
    _emit(text, args.out)


COMMANDS = {
    "generate": _cmd_generate, "select": _cmd_select, "evaluate": _cmd_evaluate,
    "bench": _cmd_bench, "profile": _cmd_profile, "singular-prob": _cmd_singular_prob,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (DSubsetError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"dsubset: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
