"""Benchmark of the compiled pair-search core against the numpy fallback.

The cell-list pair enumeration dominates the Monte-Carlo harness runtime,
which is why the package carries a compiled extension at all. Run:

    python3 benchmarks/bench_core.py [--n 20000 40000] [--eps 0.05] [--reps 3]
"""
import argparse
import time

import numpy as np

from glcloud import _core_py

try:
    from glcloud import _core
except ImportError:
    _core = None


def timeit(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[5000, 20000, 40000])
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'n':>8} {'task':<18} {'python':>10} {'cython':>10} {'speedup':>8}")
    for n in args.n:
        pts = rng.random((n, 2))
        labels = (pts[:, 0] > 0.5).astype(np.uint8)
        cuts = np.full(2, args.eps)

        t_py, (ip, _) = timeit(lambda: _core_py.neighbor_pairs(pts, cuts), args.reps)
        if _core is not None:
            t_cy, (ic, _) = timeit(lambda: _core.neighbor_pairs(pts, cuts), args.reps)
            assert len(ip) == len(ic)
            print(f"{n:>8} {'neighbor_pairs':<18} {t_py:>9.4f}s {t_cy:>9.4f}s "
                  f"{t_py / t_cy:>7.1f}x")
        else:
            print(f"{n:>8} {'neighbor_pairs':<18} {t_py:>9.4f}s {'-':>10} {'-':>8}")

        t_py, c_py = timeit(lambda: _core_py.count_cross_pairs(pts, labels, args.eps),
                            args.reps)
        if _core is not None:
            t_cy, c_cy = timeit(lambda: _core.count_cross_pairs(pts, labels, args.eps),
                                args.reps)
            assert c_py == c_cy
            print(f"{n:>8} {'count_cross_pairs':<18} {t_py:>9.4f}s {t_cy:>9.4f}s "
                  f"{t_py / t_cy:>7.1f}x")
        else:
            print(f"{n:>8} {'count_cross_pairs':<18} {t_py:>9.4f}s {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
