"""Compare the compiled and pure-numpy kernel backends.

Times the raw kernels and the heuristics built on them on lifted
Wishart-normal instances and prints one row per (n, m, task) with the
median seconds for each backend and the speed-up.

    python benchmarks/bench_kernels.py --n 100000 400000 --m 11 21 --reps 11
"""
import argparse
import time

import numpy as np

from dsubset import RegressorSet, gkm, kernels, kym, rgh
from dsubset.bench import gen_wishart_normal
from dsubset.heuristics import TIE_RTOL
from dsubset.rng import stream


def median_seconds(fn, reps):
    ts = []
    for r in range(reps):
        t = time.perf_counter()
        fn(r)
        ts.append(time.perf_counter() - t)
    return float(np.median(ts))


def tasks(F):
    X = F.data
    n, m = X.shape
    v2 = np.einsum("ij,ij->i", X, X)
    active = np.ones(n, dtype=np.uint8)

    def project(r):
        W = X.copy()
        kernels.project_out(W, X[0], v2.copy(), active)

    return {
        "project_out (incl. copy)": project,
        "masked_argmax": lambda r: kernels.masked_argmax(v2, active, TIE_RTOL),
        "gkm": lambda r: gkm(F),
        "kym": lambda r: kym(F, stream(r)),
        "rgh": lambda r: rgh(F),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[100000, 400000])
    ap.add_argument("--m", type=int, nargs="+", default=[6, 11, 21])
    ap.add_argument("--reps", type=int, default=11)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available()
    if "compiled" not in backends:
        print("compiled extension not built; timing the numpy backend only")
    head = f"{'n':>8} {'m':>3} {'task':<26}" + "".join(f"{b:>12}" for b in backends)
    # speed-up = numpy time / compiled time
    print(head + ("    speed-up" if len(backends) > 1 else ""))
    for n in args.n:
        for m in args.m:
            F = RegressorSet(gen_wishart_normal(n, m - 1, stream(args.seed, n, m)))
            for name in tasks(F):
                secs = []
                for b in backends:
                    with kernels.using(b):
                        secs.append(median_seconds(tasks(F)[name], args.reps))
                line = f"{n:>8} {m:>3} {name:<26}" + "".join(f"{s:>12.3e}" for s in secs)
                if len(secs) > 1:
                    by_name = dict(zip(backends, secs))
                    line += f"{by_name['python'] / by_name['compiled']:>11.2f}x"
                print(line)


if __name__ == "__main__":
    main()
