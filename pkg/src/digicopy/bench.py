"""Desk-scale timing of one evaluation point, with a full-scale extrapolation."""

from __future__ import annotations

import time

import numpy as np

from .corrwin import StandardizedWindow, _finish
from .indicator import EngineConfig, row_abs_sums

FULL_SCALE_N = 1_200_000
FULL_SCALE_POINTS = 57  # monthly points in the published experiment


def random_window(n: int, k: int = 6, seed: int = 0) -> StandardizedWindow:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(k, n))
    mean = x.sum(axis=0) / k
    d = x - mean
    return _finish(d, (d * d).sum(axis=0) / (k - 1), np.zeros(n, dtype=bool), k)


def benchmark_point(n: int = 10_000, k: int = 6, cfg: EngineConfig | None = None, repeats: int = 1, seed: int = 0) -> dict:
    """Time ``row_abs_sums`` for one window; work grows as ``n**2 * k / 2``."""
    cfg = cfg or EngineConfig()
    z = random_window(n, k, seed)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        g = row_abs_sums(z, cfg)
        best = min(best, time.perf_counter() - start)
    pairs = n * (n + 1) // 2
    scale = (FULL_SCALE_N / n) ** 2
    return {
        "n": n,
        "k": k,
        "block": cfg.block,
        "threads": cfg.threads,
        "seconds": best,
        "pairs": pairs,
        "pairs_per_second": pairs / best,
        "g_min": float(g.min()),
        "g_max": float(g.max()),
        "full_scale_n": FULL_SCALE_N,
        "full_scale_seconds_per_point": best * scale,
        "full_scale_points": FULL_SCALE_POINTS,
        "full_scale_hours_total": best * scale * FULL_SCALE_POINTS / 3600.0,
    }


def format_report(r: dict) -> str:
    return (
        f"n={r['n']} k={r['k']} block={r['block']} threads={r['threads']}: "
        f"{r['seconds']:.3f} s per point ({r['pairs_per_second']:.3g} pairs/s)\n"
        f"extrapolated to n={r['full_scale_n']:,}: {r['full_scale_seconds_per_point'] / 3600:.1f} h per point, "
        f"{r['full_scale_hours_total']:.0f} h for {r['full_scale_points']} points (not run)\n"
    )
