"""Monte Carlo averaging of the integrand over the shared Gaussian field.

Each sample index owns an independent random substream derived from
``(seed, index)``, so the draw for sample ``i`` never depends on batching or
on how many workers run the loop.  Samples are evaluated in fixed-size
chunks, collected into one array ordered by sample index and reduced in a
single pass, which keeps results bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ModelParams
from .precompute import (
    PrecomputeTables,
    build_tables,
    falling_factorials,
    unitary_contractions,
)
from .traces import OutputPattern, _RowKernel
from .unitary import UnitaryMatrix

__all__ = ["Estimate", "estimate", "estimate_distribution", "cosine_similarity"]

# Fixed evaluation chunk; part of the determinism contract (the chunk
# partition depends only on the sample count, never on the worker count).
_CHUNK = 1024


@dataclass(frozen=True)
class Estimate:
    """A probability estimate with its Monte Carlo uncertainty.

    ``stderr`` is the sample standard deviation (unbiased) divided by
    ``sqrt(samples)``; ``stddev`` is the plain sample standard deviation.
    Estimates may come out slightly negative through noise; they are
    reported as-is and flagged via :attr:`negative`.
    """

    mean: float
    stderr: float
    stddev: float
    samples: int
    order: int
    seed: int

    @property
    def negative(self) -> bool:
        return self.mean < 0.0


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    )


def _field_block(
    seed: int, start: int, stop: int, n_modes: int, scale: float
) -> np.ndarray:
    block = np.empty((stop - start, n_modes))
    for i in range(start, stop):
        block[i - start] = _sample_rng(seed, i).standard_normal(n_modes)
    block *= scale
    return block


def pattern_seed(seed: int, pattern: OutputPattern) -> int:
    """Per-pattern seed derived from the pattern content, so duplicate
    patterns in a batch always reproduce identical estimates."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(pattern.counts))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_sampling(
    kernel: _RowKernel,
    n_modes: int,
    sd: float,
    order: int,
    samples: int,
    seed: int,
    workers: int,
) -> np.ndarray:
    values = np.empty(samples)
    chunks = [(a, min(a + _CHUNK, samples)) for a in range(0, samples, _CHUNK)]

    def run(bounds: tuple[int, int]) -> None:
        a, b = bounds
        block = _field_block(seed, a, b, n_modes, sd)
        values[a:b] = kernel.evaluate(block, order)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
            list(pool.map(run, chunks))
    else:
        for bounds in chunks:
            run(bounds)
    return values


def _estimate_with_tables(
    u: UnitaryMatrix,
    params: ModelParams,
    pattern: OutputPattern,
    tables: PrecomputeTables,
    order: int,
    samples: int,
    seed: int,
    workers: int,
) -> Estimate:
    kernel = _RowKernel(tables, params, u, pattern)
    sd = math.sqrt(params.var_xi0)
    values = _run_sampling(kernel, u.n, sd, order, samples, seed, workers)
    scale = (params.prefactor_per_mode * params.norm_per_mode) ** u.n
    stddev = float(values.std(ddof=1))
    return Estimate(
        mean=scale * float(values.mean()),
        stderr=scale * stddev / math.sqrt(samples),
        stddev=scale * stddev,
        samples=samples,
        order=order,
        seed=seed,
    )


def estimate(
    u: UnitaryMatrix,
    params: ModelParams,
    pattern: OutputPattern,
    order: int,
    samples: int,
    seed: int,
    workers: int = 1,
) -> Estimate:
    """Estimate the probability of ``pattern`` from ``samples`` field draws.

    Deterministic for a fixed ``seed`` regardless of ``workers``.  Requires
    ``samples >= 2`` so the standard error is defined.
    """
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    if len(pattern.counts) != u.n:
        raise ValueError(f"pattern has {len(pattern.counts)} modes, matrix has {u.n}")
    tables = build_tables(u, pattern)
    return _estimate_with_tables(u, params, pattern, tables, order, samples, seed, workers)


def estimate_distribution(
    u: UnitaryMatrix,
    params: ModelParams,
    patterns: Sequence[OutputPattern],
    order: int,
    samples_per_pattern: int,
    seed: int,
    workers: int = 1,
) -> list[Estimate]:
    """Estimate a batch of patterns, sharing the unitary contractions.

    Every pattern runs with a seed derived from its counts (see
    :func:`pattern_seed`), so the result for a pattern does not depend on
    its position in the list.
    """
    if not patterns:
        raise ValueError("patterns list is empty")
    if samples_per_pattern < 2:
        raise ValueError(f"samples must be >= 2, got {samples_per_pattern}")
    t2, m2, q4 = unitary_contractions(u)
    out = []
    for pattern in patterns:
        if len(pattern.counts) != u.n:
            raise ValueError(
                f"pattern has {len(pattern.counts)} modes, matrix has {u.n}"
            )
        tables = PrecomputeTables(
            t2=t2, m2=m2, q4=q4,
            factorials=falling_factorials(max(pattern.counts, default=0)),
        )
        out.append(
            _estimate_with_tables(
                u, params, pattern, tables, order,
                samples_per_pattern, pattern_seed(seed, pattern), workers,
            )
        )
    return out


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """Inner-product similarity of two probability vectors; 0 if either is null."""
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    denom = float(np.linalg.norm(av) * np.linalg.norm(bv))
    if denom == 0.0:
        return 0.0
    return float(np.dot(av, bv) / denom)
