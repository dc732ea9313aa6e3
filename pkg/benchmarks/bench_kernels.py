#!/usr/bin/env python3
"""Benchmark the compiled particle kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [N]

Times the three hot loops (semi-implicit push of each order, charge
deposition, field gather) plus the fine reference orbit, and prints a
table with the compiled/NumPy speedup.
"""

import sys
import time

import numpy as np

from gyropic import kernels
from gyropic.kernels import numpy_backend


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(n=200_000):
    if not kernels.HAS_COMPILED:
        print("compiled backend not available; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    E_grid = rng.normal(0, 1, (65, 65, 2))
    L = 6.0
    rows = []

    for order in (1, 2, 3):
        X = rng.uniform(-5, 5, (n, 2))
        e = np.abs(rng.normal(2, 1, n))
        W = rng.normal(0, 1, (n, 2))
        args = (0.0, 0.1, 0.05, order, 2, 0.0, 2, E_grid, L)
        tc = timeit(lambda: kernels.push_ensemble(X.copy(), e.copy(), W.copy(), *args))
        tn = timeit(lambda: numpy_backend.push_ensemble(X.copy(), e.copy(), W.copy(), *args))
        rows.append((f"push order {order} (grid E)", tc, tn))

    X = rng.uniform(-7, 7, (n, 2))
    w = rng.uniform(0, 1, n)
    tc = timeit(lambda: kernels.deposit_cic(X, w, L, np.zeros((65, 65))))
    tn = timeit(lambda: numpy_backend.deposit_cic(X, w, L, np.zeros((65, 65))))
    rows.append(("deposit (cloud-in-cell)", tc, tn))

    tc = timeit(lambda: kernels.gather_bilinear(E_grid, L, X))
    tn = timeit(lambda: numpy_backend.gather_bilinear(E_grid, L, X))
    rows.append(("gather (bilinear)", tc, tn))

    steps = 2_000_000
    tc = timeit(
        lambda: kernels.reference_orbit((5.0, 4.0), 30.5, (5.0, 6.0), 0.0, 20, steps // 20,
                                        1e-6, 0.05, 1, 0.5, 1),
        repeats=2,
    )
    rows.append((f"reference orbit ({steps:.0e} RK4 steps)", tc, None))

    print(f"N = {n} particles, 65x65 grid")
    print(f"{'kernel':<36} {'compiled':>12} {'numpy':>12} {'speedup':>9}")
    for name, tc, tn in rows:
        if tn is None:
            print(f"{name:<36} {tc * 1e3:>10.2f}ms {'-':>12} {'-':>9}")
        else:
            print(f"{name:<36} {tc * 1e3:>10.2f}ms {tn * 1e3:>10.2f}ms {tn / tc:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 200_000))
