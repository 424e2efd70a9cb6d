"""Benchmark the Monte Carlo failure-probability kernel: numba loop vs
pure-numpy fallback.

The two paths consume identical pre-drawn uniforms and return identical
counts; this script measures throughput only. The numba path can also be
disabled globally with CASHLAB_NO_NUMBA=1.
"""

import argparse
import time

from cashlab._accel import HAVE_NUMBA
from cashlab.worstcase import (
    WorstCaseSpec,
    failure_prob_monte_carlo,
    failure_prob_uniform,
    uniform_distribution,
)


def run(spec: WorstCaseSpec, samples: int, seed: int, accel: bool) -> tuple[float, float]:
    start = time.perf_counter()
    estimate, _ = failure_prob_monte_carlo(
        spec, uniform_distribution(spec.M), samples, seed, accel=accel
    )
    return estimate, time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=2 * 10**6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cases = {
        "M=2, theta=(1,3), K=10": WorstCaseSpec.of([[1], [3]], K=10),
        "M=11, mixed, K=40": WorstCaseSpec.of(
            [[1], [2], [4], [2, 2], [8], [1], [16], [2, 4], [4, 4], [2], [8, 2]], K=40
        ),
    }
    print(f"samples per case: {args.samples}")
    for label, spec in cases.items():
        closed = failure_prob_uniform(spec)
        rows = []
        if HAVE_NUMBA:
            est, warm = run(spec, min(args.samples, 10**4), args.seed, accel=True)
            est, t_numba = run(spec, args.samples, args.seed, accel=True)
            rows.append(("numba", est, t_numba, f"(compile+warmup {warm:.2f}s)"))
        est_np, t_numpy = run(spec, args.samples, args.seed, accel=False)
        rows.append(("numpy", est_np, t_numpy, ""))
        print(f"\n{label}  closed-form {closed:.6f}")
        for name, est, elapsed, note in rows:
            rate = args.samples / elapsed / 1e6
            print(f"  {name:6s} estimate {est:.6f}  {elapsed:7.3f}s  {rate:6.1f} Msamples/s {note}")
        if HAVE_NUMBA:
            match = "identical" if est == est_np else "MISMATCH"
            print(f"  paths: {match}; numba speedup x{t_numpy / t_numba:.1f}")


if __name__ == "__main__":
    main()
