"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs the four pair-scan kernels on random-walk inputs at a few grid sizes and
prints per-kernel medians plus the speedup factor.  Usage:

    python3 benchmarks/bench_kernels.py [--sizes 1024 4096] [--repeats 5]
"""

import argparse
import time

import numpy as np

from roughflow import _kernels_py

try:
    from roughflow import _kernels
except ImportError:
    _kernels = None


def walk(n, d, seed=0):
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 1.0, n)
    values = np.cumsum(rng.standard_normal((n, d)) * n ** -0.5, axis=0)
    return times, np.ascontiguousarray(values)


def timed(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def bench(n, d, repeats):
    times, values = walk(n, d)
    norms = np.ascontiguousarray(np.sqrt((values * values).sum(axis=1)))
    radii = np.linspace(0.1, norms.max(), 32)
    cases = [
        ("holder_profile", lambda m: m.holder_profile(times, values, 0.4)),
        ("pvar_dp", lambda m: m.pvar_dp(values, 2.0)),
        ("max_increment_dyadic", lambda m: m.max_increment_dyadic(times, values, 10)),
        ("crossing_times", lambda m: m.crossing_times(times, norms, radii)),
    ]
    for name, call in cases:
        t_py = timed(lambda: call(_kernels_py), repeats)
        if _kernels is None:
            print(f"n={n:6d} {name:22s} python {t_py * 1e3:9.2f} ms   (no compiled backend)")
            continue
        t_c = timed(lambda: call(_kernels), repeats)
        print(f"n={n:6d} {name:22s} python {t_py * 1e3:9.2f} ms   "
              f"cython {t_c * 1e3:9.2f} ms   x{t_py / t_c:7.1f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096])
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    for n in args.sizes:
        bench(n, args.dim, args.repeats)


if __name__ == "__main__":
    main()
