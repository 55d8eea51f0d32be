"""Numba vs numpy timings for the partition DP and the envelope kernel.

    python benchmarks/bench_kernels.py [--sizes 257 513 1025] [--repeat 3]

The DP is O(n^2) in the grid size and dominates every V computation.
"""
import argparse
import time

import numpy as np

from rieszvar import kernels
from rieszvar._accel import USE_NUMBA
from rieszvar.bvfunc import BVFunction
from rieszvar.phi import DoublePhase
from rieszvar.profiles import PiecewiseLinear


def _setup(n):
    phi = DoublePhase(1.3, PiecewiseLinear([0, 0.5, 1], [1.0, 0.0, 2.0]))
    f = BVFunction.piecewise_linear([0, 0.3, 0.7, 1], [0, 1, -0.5, 0.2], atoms=[(0.5, 0.4)])
    x = np.linspace(0, 1, n)
    ranges = phi.cell_ranges(x[:-1], x[1:])
    return phi, x, f.evaluate(x), ranges


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[257, 513, 1025])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if not USE_NUMBA:
        print("numba unavailable or disabled; timing the numpy path only")
    print(f"{'kernel':<8}{'n':>7}{'numpy s':>12}{'numba s':>12}{'speedup':>10}{'max |diff|':>13}")
    for n in args.sizes:
        phi, x, fx, (lo1, hi1, lo2, hi2) = _setup(n)
        dp = lambda use: kernels.dp_sup(x, fx, lo1, hi1, lo2, hi2, phi.kind, phi.prm, True, use)
        t_np, (b_np, _) = _best(lambda: dp(False), args.repeat)
        if USE_NUMBA:
            dp(True)  # compile outside the timed region
            t_nb, (b_nb, _) = _best(lambda: dp(True), args.repeat)
            diff = float(np.max(np.abs(b_np - b_nb)))
            print(f"{'dp':<8}{n:>7}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>13.2e}")
        else:
            print(f"{'dp':<8}{n:>7}{t_np:>12.4f}{'-':>12}{'-':>10}{'-':>13}")

        m = 200 * n
        rng = np.random.default_rng(0)
        t = rng.exponential(2.0, m)
        lo = rng.uniform(0, 1, m)
        hi = lo + rng.uniform(0, 1, m)
        zeros = np.zeros(m)
        env = lambda use: kernels.env_many(phi.kind, t, lo, hi, zeros, zeros, phi.prm, True, use)
        t_np, e_np = _best(lambda: env(False), args.repeat)
        if USE_NUMBA:
            env(True)
            t_nb, e_nb = _best(lambda: env(True), args.repeat)
            diff = float(np.max(np.abs(e_np - e_nb)))
            print(f"{'env':<8}{m:>7}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>13.2e}")
        else:
            print(f"{'env':<8}{m:>7}{t_np:>12.4f}{'-':>12}{'-':>10}{'-':>13}")


if __name__ == "__main__":
    main()
