#!/usr/bin/env python3
"""Benchmark the compiled solver kernels against the numpy/Python fallback.

Usage:
    python benchmarks/bench_backends.py [--quick]

Times the three kernels on QUBO instances compiled from the default grids
and prints per-kernel wall times plus the compiled-over-fallback speedup.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gpqubo import Hyperparams, build, make_grid
from gpqubo.backend import _pykernels
from gpqubo.solve import _tie_eps

try:
    from gpqubo.backend import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_case(name, rows, cols, k, gray_ok, quick):
    domain = make_grid(rows, cols)
    h = Hyperparams(1.0, 1.0, 0.1)
    q = build(domain, h, K=k, w=0.5)
    eps = _tie_eps(q)
    sweeps = 100 if quick else 300
    cases = []
    if gray_ok:
        cases.append(("gray_scan", lambda m: m.gray_scan(q.linear, q.quadratic, eps)))
    cases.append(("combo_scan", lambda m: m.combo_scan(q.linear, q.quadratic, k, eps)))
    cases.append(
        (
            "anneal_run",
            lambda m: m.anneal_run(q.linear, q.quadratic, 10.0, 0.97, sweeps, 10, 0, eps),
        )
    )
    print(f"\n{name}: n = {q.n}, K = {k}")
    print(f"  {'kernel':<12} {'fallback':>12} {'compiled':>12} {'speedup':>9}")
    for label, call in cases:
        t_py, res_py = _time(lambda: call(_pykernels), repeat=1 if quick else 2)
        if _ckernels is None:
            print(f"  {label:<12} {t_py * 1e3:>10.1f}ms {'n/a':>12} {'n/a':>9}")
            continue
        t_c, res_c = _time(lambda: call(_ckernels), repeat=2 if quick else 3)
        same = np.array_equal(np.atleast_1d(res_py[0]), np.atleast_1d(res_c[0]))
        flag = "" if same else "  (!! results differ)"
        print(
            f"  {label:<12} {t_py * 1e3:>10.1f}ms {t_c * 1e3:>10.1f}ms {t_py / t_c:>8.1f}x{flag}"
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller cases, fewer repeats")
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled backend unavailable; timing fallback only")
    bench_case("4x4 grid", 4, 4, 3, gray_ok=True, quick=args.quick)
    bench_case("5x5 grid", 5, 5, 7, gray_ok=True, quick=args.quick)
    if not args.quick:
        bench_case("6x6 grid", 6, 6, 7, gray_ok=False, quick=False)


if __name__ == "__main__":
    main()
