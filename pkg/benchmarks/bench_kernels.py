#!/usr/bin/env python3
"""Benchmark the compiled logistic-regression kernels against the NumPy
fallback on a realistic one-hot workload.

Usage: python benchmarks/bench_kernels.py [--rows 150000] [--iterations 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from venuetrace import synth
from venuetrace.kernels import pure

try:
    from venuetrace.kernels import _native as native
except ImportError:
    native = None


def build_problem(rows: int):
    dataset = synth.generate_dataset(synth.GeneratorConfig(n_records=rows, seed=99))
    labeled = dataset.to_labeled()
    return labeled.feature_indices(), labeled.features.shape[1], labeled.labels.astype(np.float64)


def time_call(fn, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=150_000)
    parser.add_argument("--iterations", type=int, default=200)
    args = parser.parse_args()

    idx, n_features, y = build_problem(args.rows)
    print(f"problem: {args.rows} rows x {idx.shape[1]} groups ({n_features} one-hot columns), "
          f"{args.iterations} gradient steps\n")

    backends = {"pure (NumPy)": pure}
    if native is not None:
        backends["native (Cython)"] = native
    else:
        print("compiled extension not built; showing the fallback only\n")

    results = {}
    for name, impl in backends.items():
        fit_time, (w, b) = time_call(
            lambda impl=impl: impl.logreg_fit(idx, n_features, y, 0.2, args.iterations, 1e-3)
        )
        margin_time, _ = time_call(lambda impl=impl, w=w, b=b: impl.logreg_margins(idx, w, b))
        results[name] = (fit_time, margin_time, w, b)

    print(f"{'backend':<18}{'fit':>12}{'margins':>12}{'steps/s':>12}")
    for name, (fit_time, margin_time, _w, _b) in results.items():
        print(f"{name:<18}{fit_time:>10.3f}s{margin_time:>11.4f}s{args.iterations / fit_time:>12.1f}")

    if len(results) == 2:
        (pure_fit, _, w_p, b_p), (native_fit, _, w_n, b_n) = (
            results["pure (NumPy)"],
            results["native (Cython)"],
        )
        agree = np.allclose(w_p, w_n, atol=1e-9) and abs(b_p - b_n) < 1e-9
        print(f"\nspeedup: {pure_fit / native_fit:.2f}x | backends agree: {agree}")


if __name__ == "__main__":
    main()
