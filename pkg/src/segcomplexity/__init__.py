"""Complexity factors, ablations, and metrics for multi-object segmentation
datasets."""

from .ablation import AblationSpec, apply_ablation_ops, apply_ablations
from .dataset import (
    DatasetManifest,
    ObjectInfo,
    PrepareConfig,
    SceneRecord,
    load_manifest,
    load_scene,
    prepare_scene,
    write_dataset,
)
from .factors import (
    bg_color_gradient,
    bg_fg_color_similarity,
    bg_shape_irregularity,
    inter_object_color_similarity,
    inter_object_shape_variation,
    object_candidate_factors,
    object_color_gradient,
    object_shape_concavity,
    scene_candidate_factors,
)
from .metrics import (
    SegmentationPrediction,
    adjusted_rand,
    average_precision,
    bg_recall,
    match_instances,
    mean_best_overlap,
    panoptic_quality,
    precision_recall,
    rand_precision_recall,
    score_scene,
)
from .report import AnalyzeConfig, analyze_dataset, evaluate_dataset, prepare_dataset
from .textures import TextureBank, default_bank, load_bank

__version__ = "0.1.0"
