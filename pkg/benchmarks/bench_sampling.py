"""Compare the compiled trajectory kernel against the numpy fallback.

    python benchmarks/bench_sampling.py [--trials N] [--repeat R]

Both backends consume the same uniforms, so their counts must agree exactly.
"""
import argparse
import time

import numpy as np

from rspsim import sampling
from rspsim._sampling_py import count_trajectories as py_count
from rspsim.engine import run_exact
from rspsim.random_inputs import random_case

try:
    from rspsim._sampling_kernel import count_trajectories as c_count
except ImportError:
    c_count = None


def _time(fn, args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        counts = np.zeros(args[2].shape[0], dtype=np.int64)
        t0 = time.perf_counter()
        result = (fn(*args, counts), tuple(counts))
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=2_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--protocol", default="real-2q")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    report = run_exact(*random_case(args.protocol, rng))
    cumulative = np.cumsum([b.probability for b in report.branches])
    cumulative[-1] = 1.0
    pass_prob = np.array([b.ancilla_pass_probability for b in report.branches])
    u = np.random.default_rng(1).random((2, args.trials))
    kargs = (u[0], u[1], cumulative, pass_prob)

    print(f"active backend: {sampling.BACKEND}; {args.trials} trials, best of {args.repeat}")
    t_py, r_py = _time(py_count, kargs, args.repeat)
    print(f"numpy fallback : {t_py * 1e3:8.2f} ms  ({args.trials / t_py / 1e6:6.1f} M trials/s)")
    if c_count is None:
        print("compiled kernel: not built")
        return
    t_c, r_c = _time(c_count, kargs, args.repeat)
    print(f"compiled kernel: {t_c * 1e3:8.2f} ms  ({args.trials / t_c / 1e6:6.1f} M trials/s)")
    print(f"speedup {t_py / t_c:.2f}x; identical counts: {r_py == r_c}")


if __name__ == "__main__":
    main()
