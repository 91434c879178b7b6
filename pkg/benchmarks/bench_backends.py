#!/usr/bin/env python3
"""Benchmark the compiled weight-accumulation core against the NumPy fallback.

Runs one penalty iteration on a synthetic plane for a few sizes and prints
wall-clock medians plus the speedup.  The compiled path additionally reports
its thread scaling.

Usage: python benchmarks/bench_backends.py [--T 256] [--repeat 3]
"""
import argparse
import math
import time

import numpy as np

from tvspec import backend as bk
from tvspec.adaptive import EstimatorConfig, effective_bandwidth, penalty_step, AdaptiveState
from tvspec.preperiodogram import RawGrid, RawPlane
from tvspec.smoother import EstimationGrid, smooth_nonadaptive, weight_sum_plane


def setup(T: int, d: int):
    rng = np.random.default_rng(0)
    raw = RawPlane(grid=RawGrid(T),
                   values=np.abs(rng.standard_normal((2 * T - 1, T + 1))) + 1.0)
    cfg = EstimatorConfig(d_t=d, d_f=d).resolved()
    grid = EstimationGrid(raw.grid, d, d)
    init = smooth_nonadaptive(raw, cfg.b_t0, cfg.b_f0, grid)
    n_in = weight_sum_plane(grid, cfg.b_t0, cfg.b_f0)
    state = AdaptiveState(f_hat=init.values.copy(), N_hat=n_in.copy(),
                          N_tilde=n_in.copy(),
                          b_eff=effective_bandwidth(n_in, T),
                          theta=np.ones(grid.shape),
                          neg=np.zeros(grid.shape, bool))
    q_init = float(np.quantile(state.b_eff, cfg.q))
    return raw, grid, cfg, state, q_init


def run_once(raw, grid, cfg, state, q_init, accel, threads: int) -> float:
    t0 = time.perf_counter()
    penalty_step(state, raw, grid, cfg, 0, q_init, n_threads=threads,
                 accel=accel)
    return time.perf_counter() - t0


def median_time(fn, repeat: int) -> float:
    return float(np.median([fn() for _ in range(repeat)]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=int, default=256)
    ap.add_argument("--d", type=int, default=2, help="grid decimation")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    raw, grid, cfg, state, q_init = setup(args.T, args.d)
    window = 4 * args.T**2 * cfg.b_t0 * cfg.b_f0 / (2 * math.pi) * cfg.gamma_t * cfg.gamma_f
    points = grid.shape[0] * grid.shape[1]
    print(f"T={args.T}, grid {grid.shape[0]}x{grid.shape[1]}, "
          f"~{window * points:.2e} weight evaluations per iteration")

    n_cpu = bk.num_threads()
    results = {}
    if bk.HAVE_COMPILED:
        comp = bk.get_backend("compiled")
        for threads in sorted({1, n_cpu}):
            t = median_time(lambda: run_once(raw, grid, cfg, state, q_init,
                                             comp, threads), args.repeat)
            results[f"compiled[{threads}t]"] = t
    t = median_time(lambda: run_once(raw, grid, cfg, state, q_init,
                                     bk.get_backend("python"), 1), args.repeat)
    results["python"] = t

    base = results["python"]
    for name, t in results.items():
        print(f"{name:>16}: {t * 1e3:9.1f} ms   speedup vs python: {base / t:6.1f}x")


if __name__ == "__main__":
    main()
