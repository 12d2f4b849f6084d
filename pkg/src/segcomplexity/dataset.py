"""Scene records, on-disk dataset layout, and the preparation pipeline.

A dataset lives under one root::

    root/manifest.json          version, split, sorted scene ids, provenance
    root/images/<id>.png        RGB, 8-bit
    root/masks/<id>.png         16-bit grayscale instance label map, 0 = background
    root/pred/<id>/<k>.png      8-bit soft prediction masks, value/255 = probability

Images are numpy arrays: RGB ``(H, W, 3) uint8``, label maps ``(H, W) int32``
with non-negative instance ids. Scene preparation center-crops, resizes to a
square target (bilinear for color, nearest for labels so ids never blend),
filters objects by area, and optionally blanks the background.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    ConfigError,
    CorruptPngError,
    DimensionMismatchError,
    DuplicateIdError,
    MissingFileError,
)

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ObjectInfo:
    """Inventory entry for one instance id in a label map."""

    id: int
    pixel_count: int
    bbox: tuple[int, int, int, int]  # (min_x, min_y, max_x, max_y), inclusive


@dataclass
class SceneRecord:
    """One scene: RGB pixels, instance label map, and the object inventory."""

    id: str
    image: np.ndarray
    labels: np.ndarray
    objects: tuple[ObjectInfo, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self.image = np.asarray(self.image, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise DimensionMismatchError(f"{self.id}: image must be (H, W, 3)")
        if self.labels.shape != self.image.shape[:2]:
            raise DimensionMismatchError(
                f"{self.id}: mask {self.labels.shape} does not match "
                f"image {self.image.shape[:2]}"
            )
        if self.labels.min(initial=0) < 0:
            raise CorruptPngError(f"{self.id}: negative instance label")
        if not self.objects:
            self.objects = object_inventory(self.labels)

    @property
    def k(self) -> int:
        return len(self.objects)

    def object_mask(self, object_id: int) -> np.ndarray:
        return self.labels == object_id

    @property
    def background(self) -> np.ndarray:
        return self.labels == 0


def object_inventory(labels: np.ndarray) -> tuple[ObjectInfo, ...]:
    """Inventory of every non-zero label, ordered by id."""
    out = []
    for oid in np.unique(labels):
        if oid == 0:
            continue
        ys, xs = np.nonzero(labels == oid)
        out.append(
            ObjectInfo(
                id=int(oid),
                pixel_count=int(ys.size),
                bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
            )
        )
    return tuple(out)


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    split: str
    ids: tuple[str, ...]
    provenance: dict
    version: int = MANIFEST_VERSION

    def image_path(self, scene_id: str) -> Path:
        return self.root / "images" / f"{scene_id}.png"

    def mask_path(self, scene_id: str) -> Path:
        return self.root / "masks" / f"{scene_id}.png"

    def prediction_dir(self, scene_id: str) -> Path:
        return self.root / "pred" / scene_id


# --- PNG i/o -----------------------------------------------------------------


def _open_png(path: Path) -> Image.Image:
    if not path.is_file():
        raise MissingFileError(str(path))
    try:
        img = Image.open(path)
        img.load()
    except OSError as exc:
        raise CorruptPngError(f"{path}: {exc}") from exc
    return img


def read_image(path: Path) -> np.ndarray:
    img = _open_png(Path(path)).convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def read_labels(path: Path) -> np.ndarray:
    img = _open_png(Path(path))
    if img.mode not in ("I", "I;16", "L", "P"):
        raise CorruptPngError(f"{path}: unsupported label-map mode {img.mode}")
    if img.mode == "P":
        img = img.convert("L")
    arr = np.asarray(img)
    return arr.astype(np.int32)


def write_image(path: Path, image: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path)


def write_labels(path: Path, labels: np.ndarray) -> None:
    arr = np.asarray(labels)
    if arr.min(initial=0) < 0 or arr.max(initial=0) > 0xFFFF:
        raise ValueError("labels out of 16-bit range")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr.astype(np.uint16)).save(path)  # 16-bit grayscale PNG


def read_soft_mask(path: Path) -> np.ndarray:
    img = _open_png(Path(path)).convert("L")
    return np.asarray(img, dtype=np.float64) / 255.0


def write_soft_mask(path: Path, soft: np.ndarray) -> None:
    arr = np.clip(np.asarray(soft, dtype=np.float64), 0.0, 1.0)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.floor(arr * 255.0 + 0.5).astype(np.uint8), mode="L").save(path)


# --- manifest ----------------------------------------------------------------


def load_manifest(root: Path) -> DatasetManifest:
    root = Path(root)
    path = root / "manifest.json"
    if not path.is_file():
        raise MissingFileError(str(path))
    data = json.loads(path.read_text())
    return DatasetManifest(
        root=root,
        split=data.get("split", "train"),
        ids=tuple(data["ids"]),
        provenance=data.get("provenance", {}),
        version=data.get("version", MANIFEST_VERSION),
    )


def _write_manifest(manifest: DatasetManifest) -> None:
    payload = {
        "version": manifest.version,
        "split": manifest.split,
        "ids": list(manifest.ids),
        "provenance": manifest.provenance,
    }
    path = manifest.root / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_scene(manifest: DatasetManifest, scene_id: str) -> SceneRecord:
    """Load and validate one scene; the object inventory is recomputed."""
    if scene_id not in manifest.ids:
        raise MissingFileError(f"{scene_id} not in manifest")
    image = read_image(manifest.image_path(scene_id))
    labels = read_labels(manifest.mask_path(scene_id))
    if labels.shape != image.shape[:2]:
        raise DimensionMismatchError(
            f"{scene_id}: mask {labels.shape} vs image {image.shape[:2]}"
        )
    return SceneRecord(id=scene_id, image=image, labels=labels)


def write_dataset(
    scenes,
    root: Path,
    provenance: dict | None = None,
    split: str = "train",
) -> DatasetManifest:
    """Write scenes under ``root`` and return the manifest.

    Scene ids must be unique; the manifest lists them sorted so a reload
    enumerates scenes in a fixed order.
    """
    root = Path(root)
    ids: list[str] = []
    for scene in scenes:
        if scene.id in ids:
            raise DuplicateIdError(scene.id)
        ids.append(scene.id)
        write_scene_files(root, scene)
    manifest = DatasetManifest(
        root=root,
        split=split,
        ids=tuple(sorted(ids)),
        provenance=dict(provenance or {}),
    )
    _write_manifest(manifest)
    return manifest


def write_scene_files(root: Path, scene: SceneRecord) -> None:
    """Write one scene's image and mask (used by parallel writers)."""
    root = Path(root)
    write_image(root / "images" / f"{scene.id}.png", scene.image)
    write_labels(root / "masks" / f"{scene.id}.png", scene.labels)


def finalize_dataset(
    root: Path,
    ids,
    provenance: dict | None = None,
    split: str = "train",
) -> DatasetManifest:
    """Write the manifest for scenes whose files are already on disk."""
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise DuplicateIdError("duplicate scene ids")
    manifest = DatasetManifest(
        root=Path(root),
        split=split,
        ids=tuple(sorted(ids)),
        provenance=dict(provenance or {}),
    )
    _write_manifest(manifest)
    return manifest


# --- preparation -------------------------------------------------------------


@dataclass(frozen=True)
class PrepareConfig:
    """Scene-preparation settings.

    ``crop`` of ``None`` takes the largest centered square (explicit sizes
    are clamped to it). ``area_bounds`` are fractions of the target pixel
    area; objects outside the bounds are removed from the label map before
    the object-count filter runs.
    """

    crop: int | None = None
    target_size: int = 128
    min_objects: int = 2
    max_objects: int = 6
    area_bounds: tuple[float, float] | None = None
    blank_background: bool = False

    def __post_init__(self) -> None:
        if self.target_size <= 0:
            raise ConfigError("target_size must be positive")
        if self.crop is not None and self.crop <= 0:
            raise ConfigError("crop must be positive")
        if self.min_objects < 0 or self.max_objects < self.min_objects:
            raise ConfigError("need 0 <= min_objects <= max_objects")
        if self.area_bounds is not None:
            lo, hi = self.area_bounds
            if lo < 0 or hi < lo:
                raise ConfigError("need 0 <= area lower bound <= upper bound")


def _center_crop(arr: np.ndarray, size: int) -> np.ndarray:
    h, w = arr.shape[:2]
    size = min(size, h, w)
    y0 = (h - size) // 2
    x0 = (w - size) // 2
    return arr[y0 : y0 + size, x0 : x0 + size]


def _resize_image(image: np.ndarray, size: int) -> np.ndarray:
    if image.shape[0] == size and image.shape[1] == size:
        return image
    pil = Image.fromarray(image, mode="RGB").resize((size, size), Image.BILINEAR)
    return np.asarray(pil, dtype=np.uint8)


def _resize_labels(labels: np.ndarray, size: int) -> np.ndarray:
    if labels.shape == (size, size):
        return labels
    pil = Image.fromarray(labels.astype(np.int32), mode="I")
    pil = pil.resize((size, size), Image.NEAREST)
    return np.asarray(pil, dtype=np.int32)


def prepare_scene(
    image: np.ndarray,
    labels: np.ndarray,
    cfg: PrepareConfig,
    scene_id: str = "",
) -> SceneRecord | None:
    """Crop, resize, and filter one scene.

    Returns ``None`` when the object count after per-object area filtering
    falls outside the configured bounds. Already-prepared scenes pass
    through unchanged under the same configuration.
    """
    image = np.asarray(image, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.int32)
    if labels.shape != image.shape[:2]:
        raise DimensionMismatchError(
            f"{scene_id}: mask {labels.shape} vs image {image.shape[:2]}"
        )

    crop = cfg.crop if cfg.crop is not None else min(image.shape[:2])
    image = _center_crop(image, crop)
    labels = _center_crop(labels, crop)
    image = _resize_image(image, cfg.target_size)
    labels = _resize_labels(labels, cfg.target_size)

    if cfg.area_bounds is not None:
        lo = cfg.area_bounds[0] * cfg.target_size * cfg.target_size
        hi = cfg.area_bounds[1] * cfg.target_size * cfg.target_size
        counts = np.bincount(labels.ravel())
        for oid in range(1, counts.size):
            n = counts[oid]
            if n > 0 and (n < lo or n > hi):
                labels[labels == oid] = 0

    k = np.unique(labels[labels > 0]).size
    if not (cfg.min_objects <= k <= cfg.max_objects):
        return None

    if cfg.blank_background:
        image = image.copy()
        image[labels == 0] = 0

    return SceneRecord(id=scene_id, image=image, labels=labels)
