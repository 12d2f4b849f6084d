"""Per-object, per-scene, and background complexity factors."""

from .objects import (
    object_candidate_factors,
    object_color_gradient,
    object_shape_concavity,
)
from .scene import (
    inter_object_color_similarity,
    inter_object_shape_variation,
    scene_candidate_factors,
)
from .background import (
    bg_color_gradient,
    bg_fg_color_similarity,
    bg_shape_irregularity,
)

__all__ = [
    "object_color_gradient",
    "object_shape_concavity",
    "object_candidate_factors",
    "inter_object_color_similarity",
    "inter_object_shape_variation",
    "scene_candidate_factors",
    "bg_color_gradient",
    "bg_fg_color_similarity",
    "bg_shape_irregularity",
]
