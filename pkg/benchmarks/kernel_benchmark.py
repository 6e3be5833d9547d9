#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Two hot paths are compared:

* the compensated multiply-back residual used by the Newton-refined
  regularized inverse (dominates hyperparameter sweeps at small xi), and
* the quadrant holdout loss (one call per shuffle per grid cell; a full
  sweep makes tens of thousands of calls).

Run:  python benchmarks/kernel_benchmark.py [--sizes 150 300 750]
"""
import argparse
import time

import numpy as np

from lapbcv import _kernels


def split_ld(x_ld):
    xh = np.ascontiguousarray(x_ld.astype(np.float64))
    xl = np.ascontiguousarray((x_ld - xh.astype(np.longdouble)).astype(np.float64))
    return xh, xl


def time_call(fn, *args, min_time=0.5, max_reps=200):
    fn(*args)  # warm up
    reps, t0 = 0, time.perf_counter()
    while True:
        fn(*args)
        reps += 1
        dt = time.perf_counter() - t0
        if dt >= min_time or reps >= max_reps:
            return dt / reps


def bench_residual(backends, n, rng):
    a = rng.standard_normal((n, n))
    u, s, vt = np.linalg.svd(a)
    s[-1] = 1e-12
    a = np.ascontiguousarray((u * s) @ vt)
    x = np.linalg.solve(a, np.eye(n)).astype(np.longdouble)
    xh, xl = split_ld(x)
    out = np.zeros((n, n))
    return {name: time_call(impl.residual_dd, a, xh, xl, out)
            for name, impl in backends.items()}


def bench_loss(backends, n, k, rng):
    h = n // 2
    m = rng.standard_normal((n, n))
    m = m + m.T
    a = np.ascontiguousarray(m[:h, :h])
    b = np.ascontiguousarray(m[:h, h:])
    c = np.ascontiguousarray(m[h:, :h])
    e = np.ascontiguousarray(m[h:, h:])
    return {name: time_call(impl.bcv_loss_quadrants, a, b, c, e, k)
            for name, impl in backends.items()}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[150, 300, 750])
    args = parser.parse_args()

    backends = _kernels.backends()
    print(f"available backends: {', '.join(backends)} "
          f"(active: {_kernels.BACKEND})")
    if "compiled" not in backends:
        print("compiled extension not built; timing the fallback only")

    rng = np.random.default_rng(0)
    print("\ncompensated inverse residual (one multiply-back check):")
    header = "  n      " + "".join(f"{name:>12}" for name in backends)
    print(header + ("     speedup" if len(backends) > 1 else ""))
    for n in args.sizes:
        times = bench_residual(backends, n, rng)
        row = f"  {n:<6d} " + "".join(f"{times[name]*1e3:>10.2f}ms" for name in backends)
        if "compiled" in times and "numpy" in times:
            row += f"  {times['numpy']/times['compiled']:>9.1f}x"
        print(row)

    print("\nquadrant holdout loss (one shuffle evaluation, k=5):")
    print(header + ("     speedup" if len(backends) > 1 else ""))
    for n in args.sizes:
        times = bench_loss(backends, n, 5, rng)
        row = f"  {n:<6d} " + "".join(f"{times[name]*1e3:>10.2f}ms" for name in backends)
        if "compiled" in times and "numpy" in times:
            row += f"  {times['numpy']/times['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
