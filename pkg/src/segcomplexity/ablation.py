"""Dataset simplification transforms.

Each transform strips one complexity source out of a scene:

====  ========================================================================
C     objects flattened to their mean color (kills per-object color gradient)
S     object masks grown to their convex hulls (kills shape concavity)
T     object textures swapped for maximally distinct bank textures
      (lowers inter-object color similarity)
U     objects rescaled to a common bounding-box diagonal length
      (kills inter-object shape variation)
bgC   background flattened to its mean color
bgT   background swapped for the bank texture most unlike the foreground
bgS   background-enclosed regions grown to their convex hulls
====  ========================================================================

Compositions run in the fixed order S, T, U, C, bgS, bgT, bgC: geometry
first, then textures, then color flattening last, so that e.g. C composed
with T flattens each object to the mean of its new distinctive texture and
the combined dataset has zero gradients *and* distinct object colors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from . import geometry
from .dataset import (
    DatasetManifest,
    SceneRecord,
    finalize_dataset,
    load_manifest,
    load_scene,
    write_scene_files,
)
from .errors import (
    BankMissingError,
    BankTooSmallError,
    ConfigError,
    EmptyBackgroundError,
    EmptySideError,
    ObjectVanishedError,
)
from .parallel import ordered_map
from .sampling import scene_rng
from .textures import TextureBank, tile_at

VALID_OPS = ("C", "S", "T", "U", "bgC", "bgT", "bgS")
CANONICAL_ORDER = ("S", "T", "U", "C", "bgS", "bgT", "bgC")


@dataclass(frozen=True)
class AblationSpec:
    """Which transforms to apply, with the seed and texture bank they need."""

    ops: tuple[str, ...]
    seed: int = 0
    bank: TextureBank | None = None

    def __post_init__(self) -> None:
        if not self.ops:
            raise ConfigError("ablation op list is empty")
        unknown = [op for op in self.ops if op not in VALID_OPS]
        if unknown:
            raise ConfigError(f"unknown ablation ops: {unknown}")
        if len(set(self.ops)) != len(self.ops):
            raise ConfigError("duplicate ablation ops")
        if self.bank is None and ("T" in self.ops or "bgT" in self.ops):
            raise BankMissingError("ops T/bgT need a texture bank")

    @property
    def ordered_ops(self) -> tuple[str, ...]:
        return tuple(op for op in CANONICAL_ORDER if op in self.ops)


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5).astype(np.uint8)


def _mean_color(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return _round_half_up(image[mask].reshape(-1, 3).mean(axis=0))


def _nearest_inside(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For every pixel, the (y, x) indices of the nearest mask pixel."""
    iy, ix = ndimage.distance_transform_edt(~mask, return_indices=True)[1]
    return iy, ix


def ablate_object_color(scene: SceneRecord) -> SceneRecord:
    """C: every object's pixels set to its mean color; shapes untouched."""
    image = scene.image.copy()
    for obj in scene.objects:
        mask = scene.object_mask(obj.id)
        image[mask] = _mean_color(scene.image, mask)
    return SceneRecord(id=scene.id, image=image, labels=scene.labels.copy())


def ablate_object_shape(scene: SceneRecord) -> SceneRecord:
    """S: object masks replaced by their convex hulls.

    Newly covered pixels copy the color of the nearest original object
    pixel. Hulls are painted largest-object-first, so on overlap the
    smaller object stays visible.
    """
    image = scene.image.copy()
    labels = scene.labels.copy()
    order = sorted(scene.objects, key=lambda o: (-o.pixel_count, o.id))
    for obj in order:
        mask = scene.object_mask(obj.id)
        hull = geometry.convex_hull(mask).hull_mask
        iy, ix = _nearest_inside(mask)
        ys, xs = np.nonzero(hull)
        image[ys, xs] = scene.image[iy[ys, xs], ix[ys, xs]]
        labels[ys, xs] = obj.id
    _check_inventory(scene, labels)
    return SceneRecord(id=scene.id, image=image, labels=labels)


def _pick_distinct_textures(bank: TextureBank, k: int, rng) -> list[int]:
    """Greedy max-min selection of k tile indices by mean-color distance."""
    chosen = [int(rng.integers(len(bank)))]
    means = bank.mean_colors
    while len(chosen) < k:
        rest = [i for i in range(len(bank)) if i not in chosen]
        gaps = [
            min(float(np.linalg.norm(means[i] - means[j])) for j in chosen)
            for i in rest
        ]
        chosen.append(rest[int(np.argmax(gaps))])
    return chosen


def ablate_scene_texture(
    scene: SceneRecord, bank: TextureBank, rng: np.random.Generator
) -> SceneRecord:
    """T: object pixels replaced by tiled bank textures.

    The textures are the k-subset of the bank chosen greedily to maximize
    the minimum pairwise mean-color distance (seeded first pick); tiles are
    anchored to image coordinates so per-object texture gradients survive.
    """
    if len(bank) < scene.k:
        raise BankTooSmallError(
            f"{scene.id}: bank has {len(bank)} tiles for {scene.k} objects"
        )
    image = scene.image.copy()
    picks = _pick_distinct_textures(bank, scene.k, rng)
    for obj, tile_index in zip(scene.objects, picks):
        ys, xs = np.nonzero(scene.object_mask(obj.id))
        image[ys, xs] = tile_at(bank.tiles[tile_index], ys, xs)
    return SceneRecord(id=scene.id, image=image, labels=scene.labels.copy())


def _resize_pair(crop_img: np.ndarray, crop_mask: np.ndarray, nw: int, nh: int):
    if crop_img.shape[1] == nw and crop_img.shape[0] == nh:
        return crop_img, crop_mask
    img = np.asarray(
        Image.fromarray(crop_img, mode="RGB").resize((nw, nh), Image.BILINEAR),
        dtype=np.uint8,
    )
    mask = (
        np.asarray(
            Image.fromarray(crop_mask.astype(np.uint8) * 255, mode="L").resize(
                (nw, nh), Image.NEAREST
            )
        )
        > 0
    )
    return img, mask


def ablate_scene_scale(scene: SceneRecord) -> SceneRecord:
    """U: objects rescaled about their centroids to the mean diagonal norm.

    Color crops scale bilinearly, masks nearest-neighbor. Scaled objects
    paint largest-first and clip at the frame; an ablation that would erase
    an object entirely is an error, not a silent drop. Vacated pixels take
    the mean background color (black for blank-background scenes).
    """
    if scene.k < 2:
        raise EmptySideError(f"{scene.id}: scale ablation needs at least 2 objects")
    boxes = {o.id: geometry.bounding_box(scene.object_mask(o.id)) for o in scene.objects}
    norms = {
        oid: float(np.hypot(box.width, box.height)) for oid, box in boxes.items()
    }
    target = float(np.mean(list(norms.values())))

    bg = scene.background
    fill = _mean_color(scene.image, bg) if bg.any() else np.zeros(3, dtype=np.uint8)
    image = scene.image.copy()
    image[~bg] = fill
    labels = np.zeros_like(scene.labels)

    h, w = scene.labels.shape
    plans = []
    for obj in scene.objects:
        box = boxes[obj.id]
        s = target / norms[obj.id]
        nw = max(1, round(box.width * s))
        nh = max(1, round(box.height * s))
        plans.append((obj, box, s, nw, nh))
    plans.sort(key=lambda p: (-p[0].pixel_count * p[2] * p[2], p[0].id))

    for obj, box, s, nw, nh in plans:
        mask = scene.object_mask(obj.id)
        crop_img = scene.image[box.min_y : box.max_y + 1, box.min_x : box.max_x + 1]
        crop_mask = mask[box.min_y : box.max_y + 1, box.min_x : box.max_x + 1]
        img_s, mask_s = _resize_pair(crop_img, crop_mask, nw, nh)

        ys, xs = np.nonzero(mask)
        cx, cy = xs.mean(), ys.mean()
        tx = round(cx - (cx - box.min_x) * s)
        ty = round(cy - (cy - box.min_y) * s)

        sy0, sx0 = max(0, -ty), max(0, -tx)
        dy0, dx0 = max(0, ty), max(0, tx)
        sy1 = nh - max(0, ty + nh - h)
        sx1 = nw - max(0, tx + nw - w)
        if sy1 <= sy0 or sx1 <= sx0:
            raise ObjectVanishedError(f"{scene.id}: object {obj.id} scaled off-frame")
        piece_mask = mask_s[sy0:sy1, sx0:sx1]
        piece_img = img_s[sy0:sy1, sx0:sx1]
        window_l = labels[dy0 : dy0 + piece_mask.shape[0], dx0 : dx0 + piece_mask.shape[1]]
        window_i = image[dy0 : dy0 + piece_mask.shape[0], dx0 : dx0 + piece_mask.shape[1]]
        window_l[piece_mask] = obj.id
        window_i[piece_mask] = piece_img[piece_mask]

    _check_inventory(scene, labels)
    return SceneRecord(id=scene.id, image=image, labels=labels)


def ablate_background(
    scene: SceneRecord,
    mode: str,
    bank: TextureBank | None = None,
    rng: np.random.Generator | None = None,
) -> SceneRecord:
    """bgC / bgT / bgS background transforms."""
    bg = scene.background
    if not bg.any():
        raise EmptyBackgroundError(f"{scene.id}: no background pixels")

    if mode == "bgC":
        image = scene.image.copy()
        image[bg] = _mean_color(scene.image, bg)
        return SceneRecord(id=scene.id, image=image, labels=scene.labels.copy())

    if mode == "bgT":
        if bank is None:
            raise BankMissingError("bgT needs a texture bank")
        fg = ~bg
        if not fg.any():
            raise EmptySideError(f"{scene.id}: no foreground pixels")
        fg_mean = scene.image[fg].reshape(-1, 3).mean(axis=0)
        gaps = np.linalg.norm(bank.mean_colors - fg_mean, axis=1)
        tile = bank.tiles[int(np.argmax(gaps))]
        image = scene.image.copy()
        ys, xs = np.nonzero(bg)
        image[ys, xs] = tile_at(tile, ys, xs)
        return SceneRecord(id=scene.id, image=image, labels=scene.labels.copy())

    if mode == "bgS":
        image = scene.image.copy()
        labels = scene.labels.copy()
        regions = geometry.subcontour_regions(bg)
        for region in regions:  # already largest-first
            hull = geometry.convex_hull(region).hull_mask
            grown = hull & bg  # only ever claim original background pixels
            if not grown.any():
                continue
            iy, ix = _nearest_inside(region)
            ys, xs = np.nonzero(grown)
            image[ys, xs] = scene.image[iy[ys, xs], ix[ys, xs]]
            labels[ys, xs] = scene.labels[iy[ys, xs], ix[ys, xs]]
        return SceneRecord(id=scene.id, image=image, labels=labels)

    raise ConfigError(f"unknown background ablation mode {mode!r}")


def _check_inventory(before: SceneRecord, labels_after: np.ndarray) -> None:
    present = set(np.unique(labels_after).tolist())
    for obj in before.objects:
        if obj.id not in present:
            raise ObjectVanishedError(
                f"{before.id}: object {obj.id} erased by ablation"
            )


def _scale_loss_flag(before: SceneRecord, after: SceneRecord) -> bool:
    """True when any object kept less than half its expected scaled area."""
    boxes = {o.id: geometry.bounding_box(before.object_mask(o.id)) for o in before.objects}
    norms = [float(np.hypot(b.width, b.height)) for b in boxes.values()]
    target = float(np.mean(norms))
    after_counts = {o.id: o.pixel_count for o in after.objects}
    for obj in before.objects:
        box = boxes[obj.id]
        s = target / float(np.hypot(box.width, box.height))
        expected = obj.pixel_count * s * s
        if after_counts.get(obj.id, 0) < 0.5 * expected:
            return True
    return False


def apply_ablation_ops(scene: SceneRecord, spec: AblationSpec) -> SceneRecord:
    """Run the spec's transforms on one scene in canonical order."""
    rng = scene_rng(spec.seed, scene.id)
    out = scene
    for op in spec.ordered_ops:
        if op == "S":
            out = ablate_object_shape(out)
        elif op == "T":
            out = ablate_scene_texture(out, spec.bank, rng)
        elif op == "U":
            out = ablate_scene_scale(out)
        elif op == "C":
            out = ablate_object_color(out)
        else:
            out = ablate_background(out, op, bank=spec.bank, rng=rng)
    return out


def _ablate_one(args) -> tuple[str, bool]:
    manifest, spec, out_root, scene_id = args
    scene = load_scene(manifest, scene_id)
    result = apply_ablation_ops(scene, spec)
    flagged = "U" in spec.ops and _scale_loss_flag(scene, result)
    write_scene_files(Path(out_root), result)
    return result.id, flagged


def apply_ablations(
    manifest: DatasetManifest | Path,
    spec: AblationSpec,
    out_root: Path,
    jobs: int = 1,
) -> DatasetManifest:
    """Transform every scene of a dataset and write the derived dataset.

    The output manifest's provenance records the source, ops, seed, and the
    ids of scenes where rescaling clipped away more than half an object.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(Path(manifest))
    out_root = Path(out_root)
    tasks = [(manifest, spec, str(out_root), scene_id) for scene_id in manifest.ids]
    results = ordered_map(_ablate_one, tasks, jobs=jobs)
    flagged = [scene_id for scene_id, flag in results if flag]
    provenance = {
        "source": str(manifest.root),
        "ops": list(spec.ops),
        "seed": spec.seed,
        "scale_clipped": flagged,
    }
    return finalize_dataset(
        out_root, [r[0] for r in results], provenance=provenance, split=manifest.split
    )
