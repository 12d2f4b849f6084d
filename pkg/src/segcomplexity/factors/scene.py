"""Inter-object (per-image) complexity factors.

The two primary factors compare object mean colors and bounding-box
diagonals; the seven candidates explore richer color/shape/layout
comparisons. Everything is invariant under permuting the objects.
"""

from __future__ import annotations

import numpy as np
from PIL import Image
from scipy.spatial.distance import cdist

from .. import geometry
from ..assignment import MAX_RGB_DISTANCE
from ..dataset import SceneRecord
from ..errors import TooFewObjectsError
from ..sampling import stratified_indices
from .objects import grayscale, local_entropy

UNIT_BOX = 32  # raster used to compare shape boundaries at a common scale


def _require_pairs(scene: SceneRecord) -> None:
    if scene.k < 2:
        raise TooFewObjectsError(f"{scene.id}: need at least 2 objects, have {scene.k}")


def _pair_mean(values: np.ndarray) -> float:
    """Mean over off-diagonal entries of a symmetric K x K matrix."""
    k = values.shape[0]
    total = values.sum() - np.trace(values)
    return float(total / (k * (k - 1)))


def inter_object_color_similarity(scene: SceneRecord) -> float:
    """1 - (mean pairwise distance of object mean colors) / (255 sqrt 3)."""
    _require_pairs(scene)
    means = np.stack(
        [scene.image[scene.object_mask(o.id)].mean(axis=0) for o in scene.objects]
    )
    return 1.0 - _pair_mean(cdist(means, means)) / MAX_RGB_DISTANCE


def inter_object_shape_variation(scene: SceneRecord) -> float:
    """Mean norm of pairwise bounding-box diagonal differences, in pixels."""
    _require_pairs(scene)
    diagonals = np.array(
        [geometry.bounding_box(scene.object_mask(o.id)).diagonal for o in scene.objects],
        dtype=np.float64,
    )
    diffs = cdist(diagonals, diagonals)
    return _pair_mean(diffs)


def _sampled_pixel_sets(scene: SceneRecord, budget: int, rng) -> list[np.ndarray]:
    """Per-object (n, 5) arrays of (r, g, b, x, y) in raster order."""
    out = []
    for obj in scene.objects:
        ys, xs = np.nonzero(scene.object_mask(obj.id))
        idx = stratified_indices(len(ys), budget, rng)
        colors = scene.image[ys[idx], xs[idx]].astype(np.float64)
        coords = np.stack([xs[idx], ys[idx]], axis=1).astype(np.float64)
        out.append(np.concatenate([colors, coords], axis=1))
    return out


def _chamfer(d: np.ndarray) -> float:
    return 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())


def _hausdorff(d: np.ndarray) -> float:
    return 0.5 * (d.min(axis=1).max() + d.min(axis=0).max())


def _unit_box_boundary(mask: np.ndarray) -> np.ndarray:
    """Boundary raster scaled into a UNIT_BOX square, aspect kept, centered."""
    boundary = geometry.boundary_pixels(mask)
    box = geometry.bounding_box(boundary)
    crop = boundary[box.min_y : box.max_y + 1, box.min_x : box.max_x + 1]
    scale = UNIT_BOX / max(box.width, box.height)
    w = max(1, round(box.width * scale))
    h = max(1, round(box.height * scale))
    pil = Image.fromarray(crop.astype(np.uint8) * 255, mode="L")
    scaled = np.asarray(pil.resize((w, h), Image.NEAREST)) > 0
    out = np.zeros((UNIT_BOX, UNIT_BOX), dtype=bool)
    y0 = (UNIT_BOX - h) // 2
    x0 = (UNIT_BOX - w) // 2
    out[y0 : y0 + h, x0 : x0 + w] = scaled
    return out


def scene_candidate_factors(
    scene: SceneRecord,
    budget: int = 1024,
    rng: np.random.Generator | None = None,
) -> dict[str, float]:
    """The seven exploratory per-image factors.

    chamfer_color_similarity    1 - mean bidirectional Chamfer RGB distance / 255 sqrt 3
    hausdorff_color_similarity  same with directed-max instead of directed-mean
    boundary_shape_similarity   mean pairwise IoU of unit-box boundary rasters
    shape_entropy               mean nonzero 3x3 entropy of the instance index image
    centroid_proximity          mean pairwise centroid distance (px)
    chamfer_proximity           mean bidirectional spatial Chamfer distance (px)
    area_variation              mean pairwise absolute area difference (px)

    Pixel sets are subsampled to ``budget`` per object (scanline-stratified,
    phase drawn from ``rng``) to bound the quadratic set comparisons.
    """
    _require_pairs(scene)
    if rng is None:
        rng = np.random.default_rng(0)
    k = scene.k
    sets = _sampled_pixel_sets(scene, budget, rng)

    chamfer_color = np.zeros((k, k))
    hausdorff_color = np.zeros((k, k))
    boundary_iou = np.zeros((k, k))
    chamfer_space = np.zeros((k, k))
    boundaries = [
        _unit_box_boundary(scene.object_mask(o.id)) for o in scene.objects
    ]
    for i in range(k):
        for j in range(i + 1, k):
            d_color = cdist(sets[i][:, :3], sets[j][:, :3])
            chamfer_color[i, j] = chamfer_color[j, i] = _chamfer(d_color)
            hausdorff_color[i, j] = hausdorff_color[j, i] = _hausdorff(d_color)
            d_space = cdist(sets[i][:, 3:], sets[j][:, 3:])
            chamfer_space[i, j] = chamfer_space[j, i] = _chamfer(d_space)
            inter = np.logical_and(boundaries[i], boundaries[j]).sum()
            union = np.logical_or(boundaries[i], boundaries[j]).sum()
            iou = inter / union if union else 0.0
            boundary_iou[i, j] = boundary_iou[j, i] = iou

    entropy = local_entropy(scene.labels.astype(np.float64))
    nonzero = entropy[entropy > 0]
    shape_entropy = float(nonzero.mean()) if nonzero.size else 0.0

    centroids = []
    for obj in scene.objects:
        ys, xs = np.nonzero(scene.object_mask(obj.id))
        centroids.append((xs.mean(), ys.mean()))
    centroid_d = cdist(np.array(centroids), np.array(centroids))

    areas = np.array([[float(o.pixel_count)] for o in scene.objects])
    area_d = cdist(areas, areas, metric="cityblock")

    return {
        "chamfer_color_similarity": 1.0 - _pair_mean(chamfer_color) / MAX_RGB_DISTANCE,
        "hausdorff_color_similarity": 1.0 - _pair_mean(hausdorff_color) / MAX_RGB_DISTANCE,
        "boundary_shape_similarity": _pair_mean(boundary_iou),
        "shape_entropy": shape_entropy,
        "centroid_proximity": _pair_mean(centroid_d),
        "chamfer_proximity": _pair_mean(chamfer_space),
        "area_variation": _pair_mean(area_d),
    }
