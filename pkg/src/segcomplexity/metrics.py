"""Segmentation scoring.

All metrics compare a ground-truth instance label map against a set of soft
prediction masks. A prediction's confidence is the mean of its soft values;
masks binarize at 0.5, and masks that binarize to nothing are discarded up
front (they predict no object). All object instances are one class.

Metrics that need a pixel partition (PQ, ARI, ARP/ARR) resolve binarized
overlaps by confidence; AP, precision/recall, and mBO accept overlapping
masks. Matching uses a strict IoU threshold (default 0.5), at which a
matching is automatically one-to-one.

Pair-counting metrics (ARI, ARP/ARR) are computed in exact integer
arithmetic; only the final ratio is floating point. ARP/ARR use the same
hypergeometric chance correction as ARI applied to pair precision and pair
recall separately; reports tag this variant as ``pair-hypergeometric``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DatasetManifest, read_soft_mask
from .errors import DataError, DimensionMismatchError

ARP_ARR_VARIANT = "pair-hypergeometric"

METRIC_NAMES = (
    "ap",
    "pq",
    "precision",
    "recall",
    "bg_recall",
    "ari",
    "fg_ari",
    "arp",
    "arr",
    "mbo",
)


@dataclass
class SegmentationPrediction:
    """Soft masks for one scene plus everything scoring derives from them."""

    scene_id: str
    soft_masks: tuple[np.ndarray, ...]
    confidences: tuple[float, ...] = field(init=False)
    binarized: tuple[np.ndarray, ...] = field(init=False)

    def __post_init__(self) -> None:
        soft = []
        for m in self.soft_masks:
            arr = np.asarray(m, dtype=np.float64)
            if arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 1.0:
                raise DataError(f"{self.scene_id}: soft mask values outside [0, 1]")
            soft.append(arr)
        kept = [m for m in soft if (m >= 0.5).any()]
        self.soft_masks = tuple(kept)
        self.confidences = tuple(float(m.mean()) for m in kept)
        self.binarized = tuple(m >= 0.5 for m in kept)

    def __len__(self) -> int:
        return len(self.soft_masks)


def load_prediction(
    manifest: DatasetManifest, scene_id: str, pred_root: Path | None = None
) -> SegmentationPrediction:
    """Soft masks from ``root/pred/<id>/<k>.png``; missing dir means none.

    ``pred_root`` points at an external prediction tree with the same
    ``<id>/<k>.png`` layout.
    """
    pred_dir = (
        Path(pred_root) / scene_id if pred_root else manifest.prediction_dir(scene_id)
    )
    masks = []
    if pred_dir.is_dir():
        entries = []
        for path in pred_dir.glob("*.png"):
            try:
                entries.append((int(path.stem), path))
            except ValueError as exc:
                raise DataError(f"{path}: prediction files must be <int>.png") from exc
        for _, path in sorted(entries):
            masks.append(read_soft_mask(path))
    return SegmentationPrediction(scene_id=scene_id, soft_masks=tuple(masks))


# --- matching ----------------------------------------------------------------


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]  # (gt id, pred index, IoU)
    unmatched_gt: tuple[int, ...]
    unmatched_pred: tuple[int, ...]


def _gt_masks(gt: np.ndarray) -> dict[int, np.ndarray]:
    return {int(g): gt == g for g in np.unique(gt) if g != 0}


def _iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = np.logical_and(a, b).sum()
    if inter == 0:
        return 0.0
    union = np.logical_or(a, b).sum()
    return float(inter / union)


def _check_shapes(gt: np.ndarray, pred: SegmentationPrediction) -> None:
    for m in pred.binarized:
        if m.shape != gt.shape:
            raise DimensionMismatchError(
                f"{pred.scene_id}: prediction {m.shape} vs ground truth {gt.shape}"
            )


def match_instances(
    gt: np.ndarray, pred: SegmentationPrediction, iou_thresh: float = 0.5
) -> MatchResult:
    """One-to-one matching between gt instances and binarized predictions.

    Candidate pairs need IoU strictly above the threshold; they are claimed
    greedily in decreasing-IoU order (at a threshold of 0.5 the matching is
    unique anyway: no two masks can both majority-overlap the same one).
    """
    gt = np.asarray(gt)
    _check_shapes(gt, pred)
    gt_masks = _gt_masks(gt)
    candidates = []
    for gid, gmask in gt_masks.items():
        for pidx, pmask in enumerate(pred.binarized):
            iou = _iou(gmask, pmask)
            if iou > iou_thresh:
                candidates.append((iou, gid, pidx))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    used_g: set[int] = set()
    used_p: set[int] = set()
    pairs = []
    for iou, gid, pidx in candidates:
        if gid in used_g or pidx in used_p:
            continue
        used_g.add(gid)
        used_p.add(pidx)
        pairs.append((gid, pidx, iou))
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_gt=tuple(g for g in gt_masks if g not in used_g),
        unmatched_pred=tuple(p for p in range(len(pred)) if p not in used_p),
    )


# --- threshold metrics ---------------------------------------------------------


def average_precision(
    gt: np.ndarray, pred: SegmentationPrediction, iou_thresh: float = 0.5
) -> float:
    """Area under the precision-recall curve at one IoU threshold.

    Predictions rank by confidence (ties by mask index); each one claims the
    still-free gt instance it overlaps above the threshold, else counts as a
    false positive. Precision is made monotone by a right-to-left running
    max and integrated over recall (all-point interpolation).
    """
    gt = np.asarray(gt)
    _check_shapes(gt, pred)
    gt_masks = _gt_masks(gt)
    n_gt = len(gt_masks)
    if len(pred) == 0:
        return 1.0 if n_gt == 0 else 0.0
    if n_gt == 0:
        return 0.0

    order = sorted(range(len(pred)), key=lambda i: (-pred.confidences[i], i))
    claimed: set[int] = set()
    flags = []
    for pidx in order:
        pmask = pred.binarized[pidx]
        best_gid, best_iou = None, iou_thresh
        for gid, gmask in gt_masks.items():
            if gid in claimed:
                continue
            iou = _iou(gmask, pmask)
            if iou > best_iou:
                best_gid, best_iou = gid, iou
        if best_gid is None:
            flags.append(False)
        else:
            claimed.add(best_gid)
            flags.append(True)

    tp = np.cumsum(flags)
    ranks = np.arange(1, len(flags) + 1)
    precision = tp / ranks
    recall = tp / n_gt
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    prev_r = 0.0
    ap = 0.0
    for p, r in zip(precision, recall):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)


def resolve_overlaps(pred: SegmentationPrediction, shape) -> np.ndarray:
    """Partition map: each pixel goes to its highest-confidence covering mask.

    Values are ``mask index + 1``; 0 marks pixels no mask claims. Confidence
    ties resolve to the lower mask index.
    """
    out = np.zeros(shape, dtype=np.int32)
    order = sorted(range(len(pred)), key=lambda i: (-pred.confidences[i], i))
    for pidx in reversed(order):  # paint winners last
        out[pred.binarized[pidx]] = pidx + 1
    return out


def panoptic_quality(
    gt: np.ndarray, pred: SegmentationPrediction, iou_thresh: float = 0.5
) -> float:
    """Matched IoU mass over TP + FP/2 + FN/2 on the resolved partition."""
    gt = np.asarray(gt)
    _check_shapes(gt, pred)
    resolved = resolve_overlaps(pred, gt.shape)
    seg_ids = [int(s) for s in np.unique(resolved) if s != 0]
    gt_masks = _gt_masks(gt)

    candidates = []
    for gid, gmask in gt_masks.items():
        for sid in seg_ids:
            iou = _iou(gmask, resolved == sid)
            if iou > iou_thresh:
                candidates.append((iou, gid, sid))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    used_g: set[int] = set()
    used_s: set[int] = set()
    iou_sum = 0.0
    for iou, gid, sid in candidates:
        if gid in used_g or sid in used_s:
            continue
        used_g.add(gid)
        used_s.add(sid)
        iou_sum += iou
    tp = len(used_g)
    fp = len(seg_ids) - tp
    fn = len(gt_masks) - tp
    denom = tp + 0.5 * fp + 0.5 * fn
    if denom == 0:
        return 1.0
    return float(iou_sum / denom)


def precision_recall(
    gt: np.ndarray, pred: SegmentationPrediction, iou_thresh: float = 0.5
) -> tuple[float, float]:
    match = match_instances(gt, pred, iou_thresh)
    tp = len(match.pairs)
    n_pred = len(pred)
    n_gt = tp + len(match.unmatched_gt)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gt if n_gt else 0.0
    return float(precision), float(recall)


def bg_recall(
    gt: np.ndarray, pred: SegmentationPrediction, iou_thresh: float = 0.5
) -> float:
    """1.0 when the predicted background overlaps the true one above the
    threshold, else 0.0; the predicted background is whatever no binarized
    mask covers."""
    gt = np.asarray(gt)
    _check_shapes(gt, pred)
    gt_bg = gt == 0
    pred_bg = np.ones(gt.shape, dtype=bool)
    for m in pred.binarized:
        pred_bg &= ~m
    if not gt_bg.any() and not pred_bg.any():
        return 1.0
    return 1.0 if _iou(gt_bg, pred_bg) > iou_thresh else 0.0


def mean_best_overlap(gt: np.ndarray, pred: SegmentationPrediction) -> float:
    """Mean over gt instances of the best IoU any binarized mask achieves."""
    gt = np.asarray(gt)
    _check_shapes(gt, pred)
    gt_masks = _gt_masks(gt)
    if not gt_masks:
        return 1.0 if len(pred) == 0 else 0.0
    best = []
    for gmask in gt_masks.values():
        ious = [_iou(gmask, pmask) for pmask in pred.binarized]
        best.append(max(ious) if ious else 0.0)
    return float(np.mean(best))


# --- pair-counting metrics -----------------------------------------------------


def _pair_stats(a: np.ndarray, b: np.ndarray) -> tuple[int, int, int, int]:
    """Exact pair counts (T, S, P, SP) for two label vectors.

    T: all pixel pairs; S: pairs sharing an ``a`` label; P: sharing a ``b``
    label; SP: sharing both. Python ints keep the later products exact.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    n = a.size

    def comb_sum(counts) -> int:
        return sum(int(c) * (int(c) - 1) // 2 for c in counts)

    t = n * (n - 1) // 2
    s = comb_sum(np.unique(a, return_counts=True)[1])
    p = comb_sum(np.unique(b, return_counts=True)[1])
    joint = a.astype(np.int64) * (int(b.max()) + 1 if n else 1) + b.astype(np.int64)
    sp = comb_sum(np.unique(joint, return_counts=True)[1])
    return t, s, p, sp


def adjusted_rand(
    gt: np.ndarray, pred: SegmentationPrediction, foreground_only: bool = False
) -> float:
    """Adjusted Rand index between the gt partition and the resolved
    prediction partition (unclaimed pixels form their own cluster).

    ``foreground_only`` restricts the comparison to pixels whose gt label is
    nonzero (the FG-ARI variant). Raw value in [-1, 1]; reports clamp it.
    """
    gt = np.asarray(gt)
    _check_shapes(gt, pred)
    resolved = resolve_overlaps(pred, gt.shape)
    a = gt.ravel()
    b = resolved.ravel()
    if foreground_only:
        keep = a != 0
        a = a[keep]
        b = b[keep]
    if a.size == 0:
        return 1.0
    t, s, p, sp = _pair_stats(a, b)
    num = 2 * (t * sp - s * p)
    den = t * (s + p) - 2 * s * p
    if den == 0:
        return 1.0 if num == 0 else 0.0
    return num / den


def rand_precision_recall(
    gt: np.ndarray, pred: SegmentationPrediction
) -> tuple[float | None, float | None]:
    """Chance-corrected pair precision and recall.

    With S the same-gt pairs, P the same-prediction pairs, and E = |S||P|/T
    the chance overlap, ARP = (|SP| - E) / (|P| - E) and ARR symmetrically
    over |S|. Splitting a gt object drives ARR below ARP; merging two does
    the opposite. A degenerate denominator yields ``None`` (missing value).
    """
    gt = np.asarray(gt)
    _check_shapes(gt, pred)
    resolved = resolve_overlaps(pred, gt.shape)
    t, s, p, sp = _pair_stats(gt.ravel(), resolved.ravel())
    num = t * sp - s * p
    arp = num / (t * p - s * p) if t * p != s * p else None
    arr = num / (t * s - s * p) if t * s != s * p else None
    return arp, arr


def score_scene(
    gt: np.ndarray,
    pred: SegmentationPrediction,
    which=METRIC_NAMES,
    iou_thresh: float = 0.5,
) -> dict[str, float | None]:
    """All requested metrics for one scene; ``None`` marks missing values."""
    out: dict[str, float | None] = {}
    if "ap" in which:
        out["ap"] = average_precision(gt, pred, iou_thresh)
    if "pq" in which:
        out["pq"] = panoptic_quality(gt, pred, iou_thresh)
    if "precision" in which or "recall" in which:
        precision, recall = precision_recall(gt, pred, iou_thresh)
        if "precision" in which:
            out["precision"] = precision
        if "recall" in which:
            out["recall"] = recall
    if "bg_recall" in which:
        out["bg_recall"] = bg_recall(gt, pred, iou_thresh)
    if "ari" in which:
        out["ari"] = adjusted_rand(gt, pred, foreground_only=False)
    if "fg_ari" in which:
        out["fg_ari"] = adjusted_rand(gt, pred, foreground_only=True)
    if "arp" in which or "arr" in which:
        arp, arr = rand_precision_recall(gt, pred)
        if "arp" in which:
            out["arp"] = arp
        if "arr" in which:
            out["arr"] = arr
    if "mbo" in which:
        out["mbo"] = mean_best_overlap(gt, pred)
    return out
