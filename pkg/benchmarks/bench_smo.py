"""Time the compiled SMO solver against the numpy fallback.

    python3 benchmarks/bench_smo.py [--sizes 500 1000 2000] [--repeats 3]
"""

import argparse
import time

import numpy as np

from augscope import core
from augscope.core import smo_fallback
from augscope.dataset import make_gaussian_imbalanced
from augscope.models import default_gamma, kernel_matrix


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000])
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--no-gram", action="store_true", help="evaluate kernel rows on the fly")
    args = p.parse_args(argv)
    if core.BACKEND != "cython":
        print("compiled backend unavailable; only the fallback can be timed")
    print(f"{'n':>6} {'iters':>7} {'compiled s':>11} {'fallback s':>11} {'speedup':>8} {'max |da|':>9}")
    for n in args.sizes:
        data = make_gaussian_imbalanced(n - n // 35, n // 35, args.d, 2.0, seed=0)
        X = np.ascontiguousarray(data.features)
        y = np.where(data.labels == 1, 1.0, -1.0)
        C = np.ones(n)
        g = default_gamma(X)
        K = None if args.no_gram else kernel_matrix(X, X, "rbf", g)
        tf, ref = _time(lambda: smo_fallback.smo_solve(X, y, C, core.RBF, g, K, 1e-3, 10**7),
                        args.repeats)
        if core.BACKEND == "cython":
            tc, got = _time(lambda: core.smo_solve(X, y, C, core.RBF, g, K, 1e-3, 10**7),
                            args.repeats)
            diff = float(np.max(np.abs(got[0] - ref[0])))
            print(f"{n:>6} {got[2]:>7} {tc:>11.4f} {tf:>11.4f} {tf / tc:>7.1f}x {diff:>9.1e}")
        else:
            print(f"{n:>6} {ref[2]:>7} {'-':>11} {tf:>11.4f} {'-':>8} {'-':>9}")


if __name__ == "__main__":
    main()
