"""Texture banks for the distinctive-texture ablations.

A bank is a set of tileable RGB textures with precomputed mean colors. The
built-in bank is procedural: 16 high-contrast patterns (stripes, checkers,
palette noise) whose mean colors spread across the RGB cube, so any six of
them picked for distinctiveness stay far apart in color. A directory of PNG
tiles can replace it to reproduce a specific hand-picked set.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

TILE_SIZE = 128


@dataclass(frozen=True)
class TextureBank:
    tiles: tuple[np.ndarray, ...]
    mean_colors: np.ndarray  # (n, 3) float

    def __len__(self) -> int:
        return len(self.tiles)


def make_bank(tiles) -> TextureBank:
    tiles = tuple(np.asarray(t, dtype=np.uint8) for t in tiles)
    if not tiles:
        raise DataError("texture bank is empty")
    for t in tiles:
        if t.ndim != 3 or t.shape[2] != 3:
            raise DataError("texture tiles must be (H, W, 3) RGB")
        if t.shape[0] < TILE_SIZE or t.shape[1] < TILE_SIZE:
            raise DataError(f"texture tiles must be at least {TILE_SIZE} px square")
    means = np.stack([t.reshape(-1, 3).mean(axis=0) for t in tiles])
    return TextureBank(tiles=tiles, mean_colors=means)


def _stripes(c1, c2, period: int, diagonal: bool) -> np.ndarray:
    y, x = np.mgrid[0:TILE_SIZE, 0:TILE_SIZE]
    phase = (x + y) if diagonal else x
    band = (phase // period) % 2
    tile = np.where(band[..., None] == 0, c1, c2)
    return tile.astype(np.uint8)


def _checker(c1, c2, cell: int) -> np.ndarray:
    y, x = np.mgrid[0:TILE_SIZE, 0:TILE_SIZE]
    band = ((x // cell) + (y // cell)) % 2
    return np.where(band[..., None] == 0, c1, c2).astype(np.uint8)


def _palette_noise(c1, c2, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pick = rng.integers(0, 2, size=(TILE_SIZE, TILE_SIZE))
    return np.where(pick[..., None] == 0, c1, c2).astype(np.uint8)


def _contrast_pair(base: tuple[int, int, int], spread: int = 56):
    """Color pair with fixed contrast 2*spread, mean as close to base as the
    cube walls allow."""
    b = np.array(base, dtype=np.int64)
    lo = np.clip(b - spread, 0, 255 - 2 * spread)
    hi = lo + 2 * spread
    return tuple(lo.tolist()), tuple(hi.tolist())


# Mean-color anchors: the 8 cube corners plus 8 secondary points, mutually
# far apart so a max-min selection of up to ~8 tiles keeps large gaps.
_ANCHORS = (
    (0, 0, 0),
    (255, 0, 0),
    (0, 255, 0),
    (0, 0, 255),
    (255, 255, 0),
    (255, 0, 255),
    (0, 255, 255),
    (255, 255, 255),
    (128, 64, 0),
    (0, 128, 64),
    (64, 0, 128),
    (255, 128, 128),
    (128, 255, 128),
    (128, 128, 255),
    (128, 128, 128),
    (255, 128, 0),
)


def default_bank() -> TextureBank:
    """The shipped procedural 16-texture bank."""
    tiles = []
    for i, anchor in enumerate(_ANCHORS):
        c1, c2 = _contrast_pair(anchor)
        kind = i % 4
        if kind == 0:
            tiles.append(_stripes(c1, c2, period=8, diagonal=False))
        elif kind == 1:
            tiles.append(_stripes(c1, c2, period=8, diagonal=True))
        elif kind == 2:
            tiles.append(_checker(c1, c2, cell=10))
        else:
            tiles.append(_palette_noise(c1, c2, seed=i))
    return make_bank(tiles)


def load_bank(directory: Path) -> TextureBank:
    """Bank from a flat directory of PNG tiles (sorted by filename)."""
    from .dataset import read_image

    directory = Path(directory)
    paths = sorted(directory.glob("*.png"))
    if not paths:
        raise DataError(f"no PNG tiles in {directory}")
    return make_bank([read_image(p) for p in paths])


def tile_at(tile: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Colors of the tile wrapped over absolute image coordinates."""
    th, tw = tile.shape[:2]
    return tile[ys % th, xs % tw]
