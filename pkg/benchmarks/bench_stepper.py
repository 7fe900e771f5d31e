#!/usr/bin/env python3
"""Timing comparison of the two theta-step kernels.

Runs the same banded march through the compiled extension and the
SciPy-backed fallback on a few grid sizes, checks that the histories
agree to roundoff, and prints a small table. The workload is the real
one: bands and loads exactly as the solver assembles them.

Usage: python benchmarks/bench_stepper.py [--sizes 64:128,256:512]
       [--repeats 5] [--mode 0]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from diskheat import _stepper_py
from diskheat.geometry import TimeGrid, build_radial_grid
from diskheat.radial_pde import active_range, scheme_bands

try:
    from diskheat import _stepper
except ImportError:
    _stepper = None


def build_case(M: int, N: int, mode: int):
    grid = build_radial_grid(R=1.0, M=M, n=2, r_star=0.5)
    tgrid = TimeGrid(T=1.0, N=N, theta=0.5)
    lo, hi = active_range(grid, mode)
    (al, ad, au), (bl, bd, bu) = scheme_bands(grid, tgrid, mode)
    r = grid.nodes[lo:hi]
    u0 = np.clip(1.0 - 4.0 * (r - 0.4) ** 2, 0.0, None)
    # time-varying load table, so the per-step load path is exercised
    rng = np.random.default_rng(7)
    loads = tgrid.dt * grid.weights[lo:hi][None, :] * (
        0.5 + 0.5 * rng.random((N, hi - lo)))
    args = [np.ascontiguousarray(x) for x in
            (al, ad, au, bl, bd, bu, u0, loads)]
    return args


def best_of(fn, args, n_steps, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args, n_steps)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64:128,128:256,256:512,512:1024",
                    help="comma list of M:N pairs")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--mode", type=int, default=0)
    args = ap.parse_args()

    sizes = []
    for item in args.sizes.split(","):
        m, n = item.split(":")
        sizes.append((int(m), int(n)))

    if _stepper is None:
        print("compiled kernel not built; timing the fallback only")
    header = f"{'M':>6} {'N':>6} {'pure ms':>10} {'compiled ms':>12} " \
             f"{'speedup':>8} {'max |diff|':>11}"
    print(header)
    print("-" * len(header))
    for M, N in sizes:
        case = build_case(M, N, args.mode)
        t_py, hist_py = best_of(_stepper_py.theta_march, case, N,
                                args.repeats)
        if _stepper is None:
            print(f"{M:>6} {N:>6} {1e3 * t_py:>10.3f} {'-':>12} {'-':>8}"
                  f" {'-':>11}")
            continue
        t_c, hist_c = best_of(_stepper.theta_march, case, N, args.repeats)
        diff = float(np.max(np.abs(hist_c - hist_py)))
        print(f"{M:>6} {N:>6} {1e3 * t_py:>10.3f} {1e3 * t_c:>12.3f} "
              f"{t_py / t_c:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
