"""Benchmark the fused run kernels: numba JIT vs plain-Python fallback.

Times each kernel-backed optimizer on the analytic objectives at the given
horizon, checks that both backends produce bit-identical trajectories, and
prints a speedup table.

Usage:  python benchmarks/compare_backends.py [--T 100000] [--repeats 3]
"""

import argparse
import time

import numpy as np

import sgdol._kernels as kernels
from sgdol import (
    AdaGradCoord,
    AdaGradGlobal,
    Adam,
    QuadraticOracle,
    RngStream,
    RosenbrockOracle,
    Sgd,
    Sgdol,
    SgdolCoord,
    run,
)

CASES = [
    ("sgdol global / rosenbrock", lambda: RosenbrockOracle(sigma=5.0),
     lambda d: Sgdol(np.zeros(d), M=1002.0, alpha=10.0), 2),
    ("sgdol coord / quadratic d=5", lambda: QuadraticOracle(np.linspace(0.1, 1.0, 5), sigma=1.0),
     lambda d: SgdolCoord(np.zeros(d), M=1.0, alpha=10.0), 5),
    ("sgd / rosenbrock", lambda: RosenbrockOracle(sigma=5.0),
     lambda d: Sgd(np.zeros(d), lr=1.0 / 1002.0), 2),
    ("adagrad global / rosenbrock", lambda: RosenbrockOracle(sigma=5.0),
     lambda d: AdaGradGlobal(np.zeros(d), lr=1e-3), 2),
    ("adagrad coord / quadratic d=5", lambda: QuadraticOracle(np.linspace(0.1, 1.0, 5), sigma=1.0),
     lambda d: AdaGradCoord(np.zeros(d), lr=1e-2), 5),
    ("adam / rosenbrock", lambda: RosenbrockOracle(sigma=5.0),
     lambda d: Adam(np.zeros(d), lr=1e-3), 2),
]


def time_case(make_oracle, make_opt, dim, T, repeats, use_numba):
    kernels.set_backend(use_numba)
    oracle = make_oracle()
    # warm-up run triggers JIT compilation outside the timed region
    run(make_opt(dim), oracle, T=min(T, 1000), rng=RngStream(0), report_every=T)
    best = float("inf")
    result = None
    for _ in range(repeats):
        opt = make_opt(dim)
        t0 = time.perf_counter()
        result = run(opt, oracle, T=T, rng=RngStream(1), report_every=100)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--T", type=int, default=100000, help="steps per run")
    parser.add_argument("--repeats", type=int, default=3, help="timing repeats (best-of)")
    args = parser.parse_args()

    if not kernels.numba_available():
        print("numba is not available; nothing to compare")
        return

    print(f"{'case':32s} {'numpy (s)':>10s} {'numba (s)':>10s} {'speedup':>8s}  identical")
    for name, make_oracle, make_opt, dim in CASES:
        t_py, r_py = time_case(make_oracle, make_opt, dim, args.T, args.repeats, False)
        t_jit, r_jit = time_case(make_oracle, make_opt, dim, args.T, args.repeats, True)
        same = (np.array_equal(r_py.x_final, r_jit.x_final)
                and np.array_equal(r_py.trajectory.stepsize, r_jit.trajectory.stepsize,
                                   equal_nan=True)
                and np.array_equal(r_py.trajectory.f_value, r_jit.trajectory.f_value))
        print(f"{name:32s} {t_py:10.4f} {t_jit:10.4f} {t_py / t_jit:7.1f}x  {same}")
    kernels.set_backend(True)


if __name__ == "__main__":
    main()
