"""Compare the compiled and pure-Python dip kernels on the bootstrap workload.

    python benchmarks/bench_dip.py --n 200 1000 5000 --reps 256
"""

import argparse
import time

import numpy as np

from ideoscale._kernels import _dip_py

try:
    from ideoscale._kernels import _dip_ext
except ImportError:
    _dip_ext = None


def _time(fn, rows, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(rows)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 1000, 5000])
    ap.add_argument("--reps", type=int, default=128, help="uniform replicates per sample size")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>6} {'python_s':>10} {'cython_s':>10} {'speedup':>8} {'max_abs_diff':>13}")
    for n in args.n:
        rows = np.sort(rng.random((args.reps, n)), axis=1)
        t_py, d_py = _time(_dip_py.dip_batch, rows)
        if _dip_ext is None:
            print(f"{n:>6} {t_py:>10.4f} {'n/a':>10} {'n/a':>8} {'n/a':>13}")
            continue
        t_c, d_c = _time(_dip_ext.dip_batch, rows)
        print(f"{n:>6} {t_py:>10.4f} {t_c:>10.4f} {t_py / t_c:>8.1f} {np.abs(d_py - d_c).max():>13.2e}")


if __name__ == "__main__":
    main()
