import math

import numpy as np
import pytest

from segcomplexity.assignment import MAX_RGB_DISTANCE
from segcomplexity.dataset import SceneRecord
from segcomplexity.errors import TooFewObjectsError
from segcomplexity.factors.scene import (
    inter_object_color_similarity,
    inter_object_shape_variation,
    scene_candidate_factors,
)

from conftest import make_scene, rect_mask


def test_identical_mean_colors_similarity_one():
    scene = make_scene(
        {
            1: (rect_mask(64, 4, 4, 10, 10), (120, 60, 200)),
            2: (rect_mask(64, 30, 30, 8, 12), (120, 60, 200)),
            3: (rect_mask(64, 45, 8, 6, 6), (120, 60, 200)),
        }
    )
    assert inter_object_color_similarity(scene) == pytest.approx(1.0)


def test_black_and_white_similarity_zero():
    scene = make_scene(
        {
            1: (rect_mask(64, 4, 4, 10, 10), (0, 0, 0)),
            2: (rect_mask(64, 30, 30, 10, 10), (255, 255, 255)),
        },
        background=(30, 30, 30),
    )
    assert inter_object_color_similarity(scene) == pytest.approx(0.0)


def test_three_primary_colors_similarity():
    scene = make_scene(
        {
            1: (rect_mask(64, 2, 2, 8, 8), (255, 0, 0)),
            2: (rect_mask(64, 20, 20, 8, 8), (0, 255, 0)),
            3: (rect_mask(64, 40, 40, 8, 8), (0, 0, 255)),
        }
    )
    want = 1.0 - (255.0 * math.sqrt(2)) / MAX_RGB_DISTANCE  # = 1 - sqrt(2)/sqrt(3)
    assert inter_object_color_similarity(scene) == pytest.approx(want, abs=1e-12)
    assert want == pytest.approx(0.1835, abs=1e-4)


def test_identical_boxes_zero_variation():
    scene = make_scene(
        {
            1: (rect_mask(64, 4, 4, 10, 14), (10, 10, 10)),
            2: (rect_mask(64, 30, 30, 10, 14), (200, 10, 10)),
        }
    )
    assert inter_object_shape_variation(scene) == 0.0


def test_diagonal_pair_variation():
    scene = make_scene(
        {
            1: (rect_mask(64, 2, 2, 10, 10), (10, 10, 10)),
            2: (rect_mask(64, 20, 20, 40, 40), (200, 10, 10)),
        }
    )
    assert inter_object_shape_variation(scene) == pytest.approx(
        math.hypot(30, 30), abs=1e-12
    )


def test_permutation_invariance():
    masks = {
        1: (rect_mask(64, 2, 2, 9, 13), (10, 200, 30)),
        2: (rect_mask(64, 20, 25, 17, 8), (250, 40, 90)),
        3: (rect_mask(64, 45, 5, 12, 12), (0, 80, 255)),
    }
    scene = make_scene(masks)
    relabeled = make_scene({1: masks[3], 2: masks[1], 3: masks[2]})
    assert inter_object_color_similarity(scene) == pytest.approx(
        inter_object_color_similarity(relabeled), abs=1e-12
    )
    assert inter_object_shape_variation(scene) == pytest.approx(
        inter_object_shape_variation(relabeled), abs=1e-12
    )
    a = scene_candidate_factors(scene, budget=512, rng=np.random.default_rng(0))
    b = scene_candidate_factors(relabeled, budget=512, rng=np.random.default_rng(0))
    for key in a:
        assert a[key] == pytest.approx(b[key], abs=1e-9), key


def test_joint_translation_invariance():
    base = {
        1: (rect_mask(64, 2, 2, 9, 9), (10, 200, 30)),
        2: (rect_mask(64, 20, 25, 17, 8), (250, 40, 90)),
    }
    moved = {
        oid: (np.roll(np.roll(m, 5, axis=0), 7, axis=1), c)
        for oid, (m, c) in base.items()
    }
    assert inter_object_shape_variation(make_scene(base)) == pytest.approx(
        inter_object_shape_variation(make_scene(moved))
    )


def test_single_object_raises():
    scene = make_scene({1: (rect_mask(64, 4, 4, 10, 10), (1, 2, 3))})
    with pytest.raises(TooFewObjectsError):
        inter_object_color_similarity(scene)
    with pytest.raises(TooFewObjectsError):
        inter_object_shape_variation(scene)
    with pytest.raises(TooFewObjectsError):
        scene_candidate_factors(scene)


# --- candidates -----------------------------------------------------------------


def test_identical_color_multisets_chamfer_similarity_one():
    rng = np.random.default_rng(3)
    texture = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
    image = np.zeros((64, 64, 3), dtype=np.uint8)
    labels = np.zeros((64, 64), dtype=np.int32)
    image[2:12, 2:12] = texture
    labels[2:12, 2:12] = 1
    image[30:40, 30:40] = texture
    labels[30:40, 30:40] = 2
    scene = SceneRecord(id="twin", image=image, labels=labels)
    c = scene_candidate_factors(scene, budget=512, rng=np.random.default_rng(0))
    assert c["chamfer_color_similarity"] == pytest.approx(1.0)


def test_identical_areas_zero_variation():
    scene = make_scene(
        {
            1: (rect_mask(64, 2, 2, 8, 8), (10, 10, 10)),
            2: (rect_mask(64, 20, 20, 16, 4), (200, 10, 10)),
        }
    )
    c = scene_candidate_factors(scene, rng=np.random.default_rng(0))
    assert c["area_variation"] == 0.0


def test_single_pixel_objects_centroid_and_chamfer():
    m1 = np.zeros((32, 32), dtype=bool)
    m1[0, 0] = True
    m2 = np.zeros((32, 32), dtype=bool)
    m2[4, 3] = True  # (x=3, y=4)
    scene = make_scene({1: (m1, (255, 0, 0)), 2: (m2, (0, 255, 0))}, size=32)
    c = scene_candidate_factors(scene, rng=np.random.default_rng(0))
    assert c["centroid_proximity"] == pytest.approx(5.0)
    assert c["chamfer_proximity"] == pytest.approx(5.0)


def test_chamfer_bounds_hausdorff(session_rng):
    for _ in range(5):
        masks = {}
        for oid, (x0, y0) in enumerate([(2, 2), (22, 8), (8, 40), (40, 40)], start=1):
            masks[oid] = (
                rect_mask(64, x0, y0, int(session_rng.integers(6, 14)), 10),
                tuple(int(v) for v in session_rng.integers(0, 256, 3)),
            )
        scene = make_scene(masks)
        # randomize textures so the point sets are nontrivial
        image = scene.image.copy()
        fg = scene.labels > 0
        image[fg] = session_rng.integers(0, 256, (int(fg.sum()), 3))
        scene = SceneRecord(id="t", image=image, labels=scene.labels)
        c = scene_candidate_factors(scene, budget=256, rng=np.random.default_rng(1))
        assert c["chamfer_color_similarity"] >= c["hausdorff_color_similarity"] - 1e-12


def test_identical_shapes_boundary_similarity_one():
    scene = make_scene(
        {
            1: (rect_mask(64, 4, 4, 12, 12), (10, 10, 10)),
            2: (rect_mask(64, 40, 40, 12, 12), (200, 10, 10)),
        }
    )
    c = scene_candidate_factors(scene, rng=np.random.default_rng(0))
    assert c["boundary_shape_similarity"] == pytest.approx(1.0)


def test_shape_entropy_zero_without_adjacency():
    # objects far apart: nonzero entropy only along object/background seams
    scene = make_scene(
        {
            1: (rect_mask(64, 4, 4, 10, 10), (50, 50, 50)),
            2: (rect_mask(64, 40, 40, 10, 10), (90, 90, 90)),
        }
    )
    c = scene_candidate_factors(scene, rng=np.random.default_rng(0))
    assert c["shape_entropy"] > 0.0
