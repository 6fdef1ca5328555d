"""Benchmark: compiled kernels vs the pure-Python fallback.

Runs the same workloads through both backends and prints wall-times and
speedups.  The workloads mirror the hot paths: the first-pass random walk
(single system, many thresholds), a later pass, the inventory simulator,
and truth estimation.

    python benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import time
from fractions import Fraction

import numpy as np

from feaslab import _core_py as pure
from feaslab.inventory import poisson_cdf_table

try:
    from feaslab import _core as compiled
except ImportError:
    compiled = None

EMPTY = np.zeros(0, dtype=np.float64)
INV = np.array([12.0, 3.0, 32.0, 1.0, 5.0, 1400.0])
CDF = np.asarray(poisson_cdf_table(25.0))


def bench_pass1(backend, reps):
    d = np.array([8], dtype=np.int64)
    h = np.linspace(0.1, 0.8, 8)
    H = np.array([17], dtype=np.int64)
    p = np.array([0.45])
    t0 = time.perf_counter()
    total = 0
    for rep in range(reps):
        out = backend.pass1_system(0, p, EMPTY, EMPTY, 1, d, h, H, rep, 0, rep, 1, 0)
        total += out["r"]
    return time.perf_counter() - t0, total


def bench_multipass(backend, reps):
    d1 = np.array([1], dtype=np.int64)
    h1 = np.array([0.3])
    H = np.array([12], dtype=np.int64)
    p = np.array([0.45])
    fr = [Fraction("0.42"), Fraction("0.55")]
    d2 = np.array([2], dtype=np.int64)
    h2 = np.array([float(f) for f in fr])
    hn = np.array([f.numerator for f in fr], dtype=np.int64)
    hd = np.array([f.denominator for f in fr], dtype=np.int64)
    t0 = time.perf_counter()
    total = 0
    for rep in range(reps):
        one = backend.pass1_system(0, p, EMPTY, EMPTY, 1, d1, h1, H, rep, 0, rep, 1, 0)
        two = backend.multipass_system(
            0, p, EMPTY, EMPTY, 1, d2, h2, hn, hd, H, 2, rep, 0, rep, 1,
            one["r"], one["sum_y"], one["lb_num"], one["lb_den"],
            one["ub_num"], one["ub_den"], one["last"], 0,
        )
        total += two["r"]
    return time.perf_counter() - t0, total


def bench_inventory(backend, reps):
    t0 = time.perf_counter()
    acc = 0.0
    for n in range(1, reps + 1):
        cost, _ = backend.inventory_year(24.0, 60.0, INV, CDF, 7, 0, n)
        acc += cost
    return time.perf_counter() - t0, acc


def bench_truth(backend, reps):
    t0 = time.perf_counter()
    counts = backend.truth_counts(2, np.array([24.0, 60.0]), INV, CDF, 2, reps, 7, 0)
    return time.perf_counter() - t0, int(counts[0])


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()
    scale = 0.1 if args.quick else 1.0

    workloads = [
        ("pass1 walk (8 thresholds)", bench_pass1, int(400 * scale) or 1),
        ("later pass (bn)", bench_multipass, int(400 * scale) or 1),
        ("inventory year", bench_inventory, int(20_000 * scale) or 1),
        ("truth counts", bench_truth, int(50_000 * scale) or 1),
    ]

    print(f"{'workload':28s} {'pure (s)':>10s} {'compiled (s)':>13s} {'speedup':>9s}")
    for name, fn, reps in workloads:
        t_pure, check_pure = fn(pure, reps)
        if compiled is not None:
            t_comp, check_comp = fn(compiled, reps)
            assert check_pure == check_comp, f"{name}: backend results differ"
            print(f"{name:28s} {t_pure:10.3f} {t_comp:13.3f} {t_pure / t_comp:8.1f}x")
        else:
            print(f"{name:28s} {t_pure:10.3f} {'n/a':>13s} {'n/a':>9s}")


if __name__ == "__main__":
    main()
