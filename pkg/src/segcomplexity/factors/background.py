"""Background complexity factors.

The background is everything with instance label 0. Its appearance factor
reuses the object gradient machinery; the color-similarity factor pairs
background pixels against foreground pixels with a distance-maximizing
assignment; the shape factor scores each region the background contour
encloses by how little of it a convex subset can cover.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import geometry
from ..assignment import MAX_RGB_DISTANCE, max_distance_mean
from ..dataset import SceneRecord
from ..errors import EmptySideError, NoRegionsError
from ..sampling import stratified_indices
from .objects import object_color_gradient

DEFAULT_PIXEL_BUDGET = 2048


@dataclass(frozen=True)
class RegionIrregularity:
    area: int
    inscribed_area: int

    @property
    def score(self) -> float:
        return 1.0 - self.inscribed_area / self.area


def bg_color_gradient(scene: SceneRecord, sobel: np.ndarray | None = None) -> float:
    """Mean Sobel magnitude inside the eroded background mask."""
    return object_color_gradient(scene.image, scene.background, sobel=sobel)


def bg_fg_color_similarity(
    scene: SceneRecord,
    budget: int = DEFAULT_PIXEL_BUDGET,
    rng: np.random.Generator | None = None,
) -> float:
    """Similarity of background and foreground colors under the most
    pessimistic pairing.

    Pixels (subsampled to ``budget`` per side) are paired one-to-one so the
    total RGB distance is maximal; the score is 1 - mean paired distance /
    (255 sqrt 3). A background that can be told apart from every object
    scores near 0; identical single-color sides score 1.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    bg = scene.background
    fg = ~bg
    if not bg.any() or not fg.any():
        raise EmptySideError(f"{scene.id}: background or foreground is empty")

    sides = []
    for mask in (bg, fg):
        ys, xs = np.nonzero(mask)
        idx = stratified_indices(len(ys), budget, rng)
        sides.append(scene.image[ys[idx], xs[idx]].astype(np.float64))
    mean_distance = max_distance_mean(sides[0], sides[1])
    return 1.0 - mean_distance / MAX_RGB_DISTANCE


def region_irregularities(scene: SceneRecord) -> list[RegionIrregularity]:
    """Per enclosed region: area and inscribed convex-set area."""
    regions = geometry.subcontour_regions(scene.background)
    out = []
    for region in regions:
        inscribed = geometry.max_inscribed_convex_set(region)
        out.append(
            RegionIrregularity(area=int(region.sum()), inscribed_area=int(inscribed.sum()))
        )
    return out


def bg_shape_irregularity(scene: SceneRecord) -> float:
    """Mean over enclosed regions of 1 - inscribed convex area / region area.

    Raises when the background encloses nothing (no objects); such scenes
    carry no value for this factor rather than a zero.
    """
    regions = region_irregularities(scene)
    if not regions:
        raise NoRegionsError(f"{scene.id}: background encloses no region")
    return float(np.mean([r.score for r in regions]))
