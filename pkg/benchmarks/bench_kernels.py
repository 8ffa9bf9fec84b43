#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the forward filter, the smoother, and a full EM fit on synthetic
series at several sizes. Run as:

    python benchmarks/bench_kernels.py [--sizes 500,2000] [--repeats 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from regimebench import _backend
from regimebench._kernels import filter_core, smooth_core
from regimebench.em import FitConfig, fit
from regimebench.regime import RegimeParams, simulate, stationary_distribution


def time_call(func, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(sizes, repeats):
    truth = RegimeParams(
        k=3,
        transition=np.array([[0.97, 0.02, 0.01], [0.015, 0.97, 0.015], [0.01, 0.02, 0.97]]),
        sigma=np.array([1.0, 3.0, 9.0]),
        mu=0.0,
    )
    pi0 = stationary_distribution(truth.transition)
    backends = ["numpy"] + (["numba"] if _backend.NUMBA_AVAILABLE else [])
    rows = []
    for T in sizes:
        series, _ = simulate(truth, T, seed=0)
        y = np.asarray(series.values)
        for backend in backends:
            _backend.set_backend(backend)
            # warm up (includes JIT compilation for numba)
            filtered, predicted, _ = filter_core(y, truth.transition, truth.sigma, truth.mu, pi0)
            smooth_core(truth.transition, filtered, predicted)
            t_filter = time_call(
                filter_core, y, truth.transition, truth.sigma, truth.mu, pi0,
                repeats=repeats,
            )
            t_smooth = time_call(
                smooth_core, truth.transition, filtered, predicted, repeats=repeats
            )
            t0 = time.perf_counter()
            fit(3, y, FitConfig(restarts=3, seed=0))
            t_fit = time.perf_counter() - t0
            rows.append((T, backend, t_filter, t_smooth, t_fit))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="500,2000,8000")
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rows = bench(sizes, args.repeats)
    print(f"{'T':>6} {'backend':>8} {'filter':>12} {'smoother':>12} {'fit(3 restarts)':>16}")
    for T, backend, t_filter, t_smooth, t_fit in rows:
        print(
            f"{T:>6} {backend:>8} {t_filter * 1e3:>10.3f}ms {t_smooth * 1e3:>10.3f}ms "
            f"{t_fit:>14.3f}s"
        )
    by_key = {(T, b): (tf, ts) for T, b, tf, ts, _ in rows}
    if _backend.NUMBA_AVAILABLE:
        print("\nspeedup (numpy / numba):")
        for T in sizes:
            f_ratio = by_key[(T, "numpy")][0] / by_key[(T, "numba")][0]
            s_ratio = by_key[(T, "numpy")][1] / by_key[(T, "numba")][1]
            print(f"{T:>6}  filter x{f_ratio:.1f}  smoother x{s_ratio:.1f}")


if __name__ == "__main__":
    main()
