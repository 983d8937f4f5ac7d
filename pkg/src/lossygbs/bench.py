"""Wall-clock benchmarks: table precomputation and per-sample evaluation."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .estimator import _field_block
from .model import ModelParams
from .precompute import build_tables
from .traces import OutputPattern, _RowKernel
from .unitary import haar_random

__all__ = ["BenchRow", "run_bench", "fit_slopes"]


@dataclass(frozen=True)
class BenchRow:
    n: int
    photons: int
    precompute_ms: float
    per_sample_us: float


def _median_time(fn, reps: int) -> float:
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def run_bench(
    n_list: list[int],
    m_list: list[int],
    params: ModelParams,
    order: int = 4,
    reps: int = 5,
    batch: int = 128,
    seed: int = 0,
) -> list[BenchRow]:
    """Median build and per-sample times for each ``(n, photons)`` pair.

    The pattern places one photon per mode starting from mode 0; the sample
    batch is drawn once per pair so only evaluation time is measured.
    """
    if reps < 5:
        raise ValueError(f"need at least 5 repetitions for a median, got {reps}")
    rows = []
    for n in n_list:
        u = haar_random(n, seed + n)
        pre_ms = 1e3 * _median_time(lambda: build_tables(u, OutputPattern((1,) * n)), reps)
        for photons in m_list:
            if photons > n:
                continue
            pattern = OutputPattern((1,) * photons + (0,) * (n - photons))
            tables = build_tables(u, pattern)
            kernel = _RowKernel(tables, params, u, pattern)
            block = _field_block(seed, 0, batch, n, math.sqrt(params.var_xi0))
            per_us = 1e6 * _median_time(lambda: kernel.evaluate(block, order), reps) / batch
            rows.append(BenchRow(n=n, photons=photons, precompute_ms=pre_ms, per_sample_us=per_us))
    return rows


def fit_slopes(rows: list[BenchRow]) -> dict[str, float]:
    """Log-log slopes versus the mode count: one per photon number plus one
    for the precompute times."""
    slopes: dict[str, float] = {}
    by_m: dict[int, list[BenchRow]] = {}
    for row in rows:
        by_m.setdefault(row.photons, []).append(row)
    for photons, group in sorted(by_m.items()):
        if len(group) >= 2:
            x = np.log([r.n for r in group])
            y = np.log([r.per_sample_us for r in group])
            slopes[f"per_sample_m{photons}"] = float(np.polyfit(x, y, 1)[0])
    pre = sorted({(r.n, r.precompute_ms) for r in rows})
    if len(pre) >= 2:
        x = np.log([n for n, _ in pre])
        y = np.log([t for _, t in pre])
        slopes["precompute"] = float(np.polyfit(x, y, 1)[0])
    return slopes
