"""Corpus-level analysis, evaluation, and preparation runners.

Everything here is an ordered reduction over scenes: workers may run in
parallel, but results are collected in scene-id order and all randomness is
derived from (seed, scene id), so reports are byte-identical for any job
count. Report payloads carry a schema ``version``; any field change bumps it.

Per-scene factor failures never abort a corpus run: the value is recorded
as missing together with a reason token and excluded from histograms and
summaries.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import (
    DatasetManifest,
    PrepareConfig,
    SceneRecord,
    finalize_dataset,
    load_manifest,
    load_scene,
    prepare_scene,
    read_image,
    read_labels,
    write_scene_files,
)
from .errors import DataError
from .factors.background import (
    bg_color_gradient,
    bg_fg_color_similarity,
    region_irregularities,
)
from .factors.objects import (
    grayscale,
    object_candidate_factors,
    object_color_gradient,
    object_shape_concavity,
    sobel_magnitude,
)
from .factors.scene import (
    inter_object_color_similarity,
    inter_object_shape_variation,
    scene_candidate_factors,
)
from .metrics import ARP_ARR_VARIANT, METRIC_NAMES, load_prediction, score_scene
from .parallel import ordered_map
from .sampling import scene_rng

REPORT_VERSION = 1

FACTOR_GROUPS = ("object", "scene", "background", "candidates")

# Factors bounded in [0, 1] get unit-interval histograms; the rest share a
# [0, 100] range with one overflow bucket.
_BOUNDED_FACTORS = frozenset(
    {
        "object_shape_concavity",
        "object_non_rectangularity",
        "object_incompactness",
        "object_discontinuity",
        "inter_object_color_similarity",
        "chamfer_color_similarity",
        "hausdorff_color_similarity",
        "boundary_shape_similarity",
        "bg_fg_color_similarity",
        "bg_shape_irregularity",
    }
)

_OBJECT_CANDIDATE_KEYS = (
    "color_count",
    "color_entropy",
    "non_rectangularity",
    "incompactness",
    "discontinuity",
    "decentralization",
)
_SCENE_CANDIDATE_KEYS = (
    "chamfer_color_similarity",
    "hausdorff_color_similarity",
    "boundary_shape_similarity",
    "shape_entropy",
    "centroid_proximity",
    "chamfer_proximity",
    "area_variation",
)


@dataclass(frozen=True)
class AnalyzeConfig:
    factors: tuple[str, ...] = ("object", "scene", "background")
    seed: int = 0
    bins: int = 50
    hungarian_budget: int = 2048
    candidate_budget: int = 1024

    def __post_init__(self) -> None:
        unknown = [f for f in self.factors if f not in FACTOR_GROUPS]
        if unknown:
            raise DataError(f"unknown factor groups: {unknown}")
        if self.bins < 2:
            raise DataError("need at least 2 histogram bins")


def _reason(exc: Exception) -> str:
    return type(exc).__name__.removesuffix("Error")


def compute_scene_factors(args) -> dict:
    """Worker: all requested factor values for one scene.

    A scene failure of any kind is recorded on the scene record; it never
    aborts the corpus run.
    """
    manifest, scene_id, config = args
    record: dict = {"id": scene_id, "missing": {}}
    try:
        scene = load_scene(manifest, scene_id)
        _fill_scene_record(record, scene, config)
    except Exception as exc:
        record["error"] = f"{_reason(exc)}: {exc}"
    return record


def _fill_scene_record(record: dict, scene, config: AnalyzeConfig) -> None:
    record["k"] = scene.k
    rng = scene_rng(config.seed, scene.id)
    want_candidates = "candidates" in config.factors

    sobel = None
    if "object" in config.factors or "background" in config.factors:
        sobel = sobel_magnitude(grayscale(scene.image))

    if "object" in config.factors or want_candidates:
        objects = []
        for obj in scene.objects:
            mask = scene.object_mask(obj.id)
            entry: dict = {"id": obj.id}
            if "object" in config.factors:
                try:
                    entry["color_gradient"] = object_color_gradient(
                        scene.image, mask, sobel=sobel
                    )
                except DataError as exc:
                    entry["color_gradient"] = None
                    record["missing"][f"object[{obj.id}].color_gradient"] = _reason(exc)
                entry["shape_concavity"] = object_shape_concavity(mask)
            if want_candidates:
                entry["candidates"] = object_candidate_factors(scene.image, mask)
            objects.append(entry)
        record["objects"] = objects

    if "scene" in config.factors or want_candidates:
        try:
            section = {}
            if "scene" in config.factors:
                section["inter_object_color_similarity"] = (
                    inter_object_color_similarity(scene)
                )
                section["inter_object_shape_variation"] = (
                    inter_object_shape_variation(scene)
                )
            if want_candidates:
                section["candidates"] = scene_candidate_factors(
                    scene, budget=config.candidate_budget, rng=rng
                )
            record["scene"] = section
        except DataError as exc:
            record["scene"] = None
            record["missing"]["scene"] = _reason(exc)

    if "background" in config.factors:
        section = {}
        try:
            section["bg_color_gradient"] = bg_color_gradient(scene, sobel=sobel)
        except DataError as exc:
            section["bg_color_gradient"] = None
            record["missing"]["bg_color_gradient"] = _reason(exc)
        try:
            section["bg_fg_color_similarity"] = bg_fg_color_similarity(
                scene, budget=config.hungarian_budget, rng=rng
            )
        except DataError as exc:
            section["bg_fg_color_similarity"] = None
            record["missing"]["bg_fg_color_similarity"] = _reason(exc)
        regions = region_irregularities(scene)
        if regions:
            section["bg_shape_irregularity"] = float(
                np.mean([r.score for r in regions])
            )
        else:
            section["bg_shape_irregularity"] = None
            record["missing"]["bg_shape_irregularity"] = "NoRegions"
        record["background"] = section
        record["background_regions"] = [
            {"area": r.area, "inscribed_area": r.inscribed_area, "score": r.score}
            for r in regions
        ]


def _collect_samples(
    records: list[dict], config: AnalyzeConfig
) -> tuple[dict[str, list[float]], dict[str, int]]:
    """Factor name -> sample values, plus per-factor missing counts."""
    samples: dict[str, list[float]] = {}
    missing: dict[str, int] = {}

    def add(name: str, value) -> None:
        samples.setdefault(name, [])
        missing.setdefault(name, 0)
        if value is None:
            missing[name] += 1
        else:
            value = float(value)
            if name in _BOUNDED_FACTORS:
                value = min(1.0, max(0.0, value))
            samples[name].append(value)

    scene_names = []
    if "scene" in config.factors:
        scene_names += ["inter_object_color_similarity", "inter_object_shape_variation"]
    if "candidates" in config.factors:
        scene_names += list(_SCENE_CANDIDATE_KEYS)

    for rec in records:
        if "error" in rec:
            continue
        for obj in rec.get("objects", []):
            if "object" in config.factors:
                add("object_color_gradient", obj.get("color_gradient"))
                add("object_shape_concavity", obj.get("shape_concavity"))
            for key, value in obj.get("candidates", {}).items():
                add(f"object_{key}", value)
        scene_section = rec.get("scene")
        if "scene" in config.factors or "candidates" in config.factors:
            if scene_section is None:
                for name in scene_names:
                    add(name, None)
            else:
                for key, value in scene_section.items():
                    if key == "candidates":
                        for ckey, cvalue in value.items():
                            add(ckey, cvalue)
                    else:
                        add(key, value)
        for key, value in (rec.get("background") or {}).items():
            add(key, value)
    return samples, missing


def _histogram(name: str, values: list[float], bins: int) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    if name in _BOUNDED_FACTORS:
        edges = np.linspace(0.0, 1.0, bins + 1)
        counts, _ = np.histogram(arr, bins=edges)
        return {"edges": edges.tolist(), "counts": counts.tolist()}
    edges = np.linspace(0.0, 100.0, bins + 1)
    counts, _ = np.histogram(arr[arr <= 100.0], bins=edges)
    return {
        "edges": edges.tolist(),
        "counts": counts.tolist(),
        "overflow": int((arr > 100.0).sum()),
    }


def _summary(values: list[float], missing: int) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return {"count": 0, "missing": missing}
    return {
        "count": int(arr.size),
        "missing": missing,
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "p5": float(np.percentile(arr, 5)),
        "p95": float(np.percentile(arr, 95)),
    }


def analyze_dataset(
    manifest: DatasetManifest | Path,
    config: AnalyzeConfig | None = None,
    jobs: int = 1,
) -> dict:
    """Factor report for a whole dataset (see module docstring)."""
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(Path(manifest))
    config = config or AnalyzeConfig()
    tasks = [(manifest, scene_id, config) for scene_id in manifest.ids]
    records = ordered_map(compute_scene_factors, tasks, jobs=jobs)
    samples, missing = _collect_samples(records, config)
    factors = {
        name: {
            "histogram": _histogram(name, values, config.bins),
            "summary": _summary(values, missing[name]),
        }
        for name, values in sorted(samples.items())
    }
    return {
        "version": REPORT_VERSION,
        "kind": "factors",
        "dataset": str(manifest.root),
        "split": manifest.split,
        "errors": sum(1 for rec in records if "error" in rec),
        "config": {
            "factors": list(config.factors),
            "seed": config.seed,
            "bins": config.bins,
            "hungarian_budget": config.hungarian_budget,
            "candidate_budget": config.candidate_budget,
        },
        "scenes": records,
        "factors": factors,
    }


def write_json(report: dict, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def write_factor_csv(report: dict, path: Path) -> None:
    """Flat per-sample export: scene_id, object_id, factor, value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scene_id", "object_id", "factor", "value"])
        for rec in report["scenes"]:
            sid = rec["id"]
            for obj in rec.get("objects", []):
                for key in ("color_gradient", "shape_concavity"):
                    if obj.get(key) is not None:
                        writer.writerow([sid, obj["id"], f"object_{key}", obj[key]])
                for key, value in obj.get("candidates", {}).items():
                    writer.writerow([sid, obj["id"], f"object_{key}", value])
            scene_section = rec.get("scene")
            if scene_section:
                for key, value in scene_section.items():
                    if key == "candidates":
                        for ckey, cvalue in value.items():
                            writer.writerow([sid, "", ckey, cvalue])
                    elif value is not None:
                        writer.writerow([sid, "", key, value])
            for key, value in (rec.get("background") or {}).items():
                if value is not None:
                    writer.writerow([sid, "", key, value])


# --- evaluation ----------------------------------------------------------------


def _clamp01(value):
    if value is None:
        return None
    return float(min(1.0, max(0.0, value)))


def evaluate_scene(args) -> dict:
    manifest, scene_id, which, iou_thresh, pred_root = args
    scene = load_scene(manifest, scene_id)
    pred = load_prediction(manifest, scene_id, pred_root=pred_root)
    scores = score_scene(scene.labels, pred, which=which, iou_thresh=iou_thresh)
    out = {"id": scene_id, "n_pred": len(pred)}
    out.update({name: _clamp01(value) for name, value in scores.items()})
    return out


def evaluate_dataset(
    manifest: DatasetManifest | Path,
    metric_names=METRIC_NAMES,
    iou_thresh: float = 0.5,
    jobs: int = 1,
    pred_root: Path | None = None,
) -> dict:
    """Metric report: per-scene scores plus mean/std across scenes.

    Scenes without a prediction directory score as zero-prediction scenes.
    Values are clamped into [0, 1]; missing values (degenerate chance
    correction) are excluded from the aggregates and counted.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(Path(manifest))
    unknown = [m for m in metric_names if m not in METRIC_NAMES]
    if unknown:
        raise DataError(f"unknown metrics: {unknown}")
    tasks = [
        (manifest, sid, tuple(metric_names), iou_thresh, pred_root)
        for sid in manifest.ids
    ]
    records = ordered_map(evaluate_scene, tasks, jobs=jobs)

    aggregate = {}
    for name in metric_names:
        values = [r[name] for r in records if r.get(name) is not None]
        missing = sum(1 for r in records if r.get(name) is None)
        entry = {"missing": missing, "count": len(values)}
        if values:
            arr = np.asarray(values)
            entry["mean"] = float(arr.mean())
            entry["std"] = float(arr.std())
        aggregate[name] = entry

    return {
        "version": REPORT_VERSION,
        "kind": "metrics",
        "dataset": str(manifest.root),
        "split": manifest.split,
        "iou_threshold": iou_thresh,
        "arp_arr_variant": ARP_ARR_VARIANT,
        "metrics": list(metric_names),
        "scenes": records,
        "aggregate": aggregate,
    }


# --- preparation ----------------------------------------------------------------


def _split_of(scene_id: str, train_fraction: float) -> str:
    digest = hashlib.sha256(scene_id.encode("utf-8")).digest()
    value = int.from_bytes(digest[:8], "big") / 2**64
    return "train" if value < train_fraction else "test"


def prepare_one(args) -> tuple[str, str] | None:
    raw_root, out_root, scene_id, cfg, train_fraction = args
    raw_root = Path(raw_root)
    image = read_image(raw_root / "images" / f"{scene_id}.png")
    labels = read_labels(raw_root / "masks" / f"{scene_id}.png")
    scene = prepare_scene(image, labels, cfg, scene_id=scene_id)
    if scene is None:
        return None
    split = _split_of(scene_id, train_fraction)
    write_scene_files(Path(out_root) / split, scene)
    return scene_id, split


def list_raw_ids(raw_root: Path) -> list[str]:
    raw_root = Path(raw_root)
    manifest_path = raw_root / "manifest.json"
    if manifest_path.is_file():
        return list(load_manifest(raw_root).ids)
    ids = sorted(p.stem for p in (raw_root / "images").glob("*.png"))
    if not ids:
        raise DataError(f"no scenes under {raw_root}")
    return ids


def prepare_dataset(
    raw_root: Path,
    out_root: Path,
    cfg: PrepareConfig,
    train_fraction: float = 10000 / 12000,
    jobs: int = 1,
) -> dict:
    """Prepare a raw corpus into train/test datasets under ``out_root``.

    The split is a deterministic hash of the scene id, so reruns and
    different job counts produce the same membership. Raises when every
    scene is filtered out.
    """
    ids = list_raw_ids(raw_root)
    tasks = [(str(raw_root), str(out_root), sid, cfg, train_fraction) for sid in ids]
    results = ordered_map(prepare_one, tasks, jobs=jobs)
    kept = [r for r in results if r is not None]
    dropped = len(results) - len(kept)
    if not kept:
        raise DataError(f"all {len(results)} scenes filtered out")
    provenance = {
        "source": str(raw_root),
        "dropped": dropped,
        "config": {
            "crop": cfg.crop,
            "target_size": cfg.target_size,
            "min_objects": cfg.min_objects,
            "max_objects": cfg.max_objects,
            "area_bounds": list(cfg.area_bounds) if cfg.area_bounds else None,
            "blank_background": cfg.blank_background,
        },
    }
    counts = {}
    for split in ("train", "test"):
        split_ids = [sid for sid, s in kept if s == split]
        counts[split] = len(split_ids)
        if split_ids:
            finalize_dataset(
                Path(out_root) / split, split_ids, provenance=provenance, split=split
            )
    return {"kept": len(kept), "dropped": dropped, "splits": counts}
