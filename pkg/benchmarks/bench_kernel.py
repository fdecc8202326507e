"""Compare the compiled and NumPy trial kernels for speed and agreement.

    python benchmarks/bench_kernel.py --trials 20000 --M_r 100 --L 10
"""
import argparse
import time

import numpy as np

from jamdetect import kernel
from jamdetect.model import SystemConfig
from jamdetect.montecarlo import db_to_linear, trial_statistics


def timed(system, present, n, seed, backend, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = trial_statistics(system, present, n, seed, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--M_r", type=int, default=100)
    parser.add_argument("--L", type=int, default=10)
    parser.add_argument("--K", type=int, default=8)
    parser.add_argument("--tau", type=int, default=10)
    parser.add_argument("--q-db", type=float, default=-17.0)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    system = SystemConfig(M_r=args.M_r, K=args.K, tau=args.tau, L=args.L, q=db_to_linear(args.q_db))
    print(f"M_r={args.M_r} L={args.L} K={args.K} tau={args.tau} trials={args.trials} "
          f"backends={sorted(kernel.BACKENDS)} default={kernel.BACKEND}")
    for present in (False, True):
        results = {}
        for name in sorted(kernel.BACKENDS):
            elapsed, S = timed(system, present, args.trials, args.seed, name, args.repeat)
            results[name] = (elapsed, S)
            print(f"  {'H1' if present else 'H0'} {name:9s} {elapsed:8.3f} s  "
                  f"{1e6 * elapsed / args.trials:8.2f} us/trial")
        if len(results) == 2:
            (tc, a), (tp, b) = results["compiled"], results["python"]
            rel = float(np.max(np.abs(a - b) / np.abs(b)))
            print(f"  speedup {tp / tc:5.2f}x   max relative difference {rel:.2e}")


if __name__ == "__main__":
    main()
