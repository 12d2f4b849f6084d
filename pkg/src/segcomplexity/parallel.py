"""Deterministic scene-parallel execution.

Work is distributed across processes but collected in submission order, and
every worker derives its randomness from (seed, scene id), so the artifacts
a run emits are byte-identical for any job count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, items, jobs: int = 1) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
