"""Deterministic pixel subsampling shared by the factor computations."""

from __future__ import annotations

import zlib

import numpy as np


def scene_rng(seed: int, scene_id: str) -> np.random.Generator:
    """Generator derived from (seed, scene id), independent of scheduling."""
    return np.random.default_rng([seed, zlib.crc32(scene_id.encode("utf-8"))])


def stratified_indices(n: int, budget: int, rng: np.random.Generator) -> np.ndarray:
    """At most ``budget`` indices, evenly spread over ``range(n)``.

    Inputs in raster order make this a scanline-stratified sample; the only
    randomness is the common fractional phase, so the cost of reproducing a
    run is one draw.
    """
    if n <= budget:
        return np.arange(n)
    phase = rng.random()
    return np.floor((np.arange(budget) + phase) * (n / budget)).astype(np.int64)
