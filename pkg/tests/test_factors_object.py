import numpy as np
import pytest

from segcomplexity.errors import EmptyAfterErosionError, EmptyMaskError
from segcomplexity.factors.objects import (
    grayscale,
    local_entropy,
    object_candidate_factors,
    object_color_gradient,
    object_shape_concavity,
    sobel_magnitude,
)

from conftest import l_shape_mask


def brute_sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    """Direct per-pixel 3x3 convolution with reflected borders."""
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)
    ky = kx.T
    h, w = gray.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            gx = gy = 0.0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    gx += kx[dy + 1, dx + 1] * gray[yy, xx]
                    gy += ky[dy + 1, dx + 1] * gray[yy, xx]
            out[y, x] = np.hypot(gx, gy)
    return out


def brute_entropy(gray: np.ndarray) -> np.ndarray:
    h, w = gray.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            values = [
                gray[yy, xx]
                for yy in range(max(0, y - 1), min(h, y + 2))
                for xx in range(max(0, x - 1), min(w, x + 2))
            ]
            n = len(values)
            ent = 0.0
            for v in set(values):
                p = values.count(v) / n
                ent -= p * np.log2(p)
            out[y, x] = ent
    return out


def _solid_scene(mask: np.ndarray, color=(90, 150, 40)) -> np.ndarray:
    image = np.zeros((*mask.shape, 3), dtype=np.uint8)
    image[mask] = color
    return image


# --- color gradient -----------------------------------------------------------


def test_uniform_object_gradient_zero():
    mask = l_shape_mask()
    image = _solid_scene(mask)
    assert object_color_gradient(image, mask) == 0.0


def test_gradient_translation_invariant():
    mask = np.zeros((32, 32), dtype=bool)
    mask[4:14, 4:14] = True
    rng = np.random.default_rng(0)
    texture = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
    image = np.zeros((32, 32, 3), dtype=np.uint8)
    image[4:14, 4:14] = texture
    v1 = object_color_gradient(np.asarray(image), mask)

    mask2 = np.roll(np.roll(mask, 7, axis=0), 5, axis=1)
    image2 = np.roll(np.roll(image, 7, axis=0), 5, axis=1)
    v2 = object_color_gradient(np.asarray(image2), mask2)
    assert v1 == v2


def test_gradient_matches_brute_force_convolution():
    mask = np.zeros((12, 12), dtype=bool)
    mask[2:10, 2:10] = True
    image = np.zeros((12, 12, 3), dtype=np.uint8)
    image[:, 6:] = 255  # left half black, right half white
    gray = grayscale(image)
    want = brute_sobel_magnitude(gray)
    got = sobel_magnitude(gray)
    assert np.allclose(got, want)
    from segcomplexity.geometry import erode_boundary

    core = erode_boundary(mask, 1)
    assert object_color_gradient(image, mask) == pytest.approx(want[core].mean())
    assert object_color_gradient(image, mask) > 0


def test_gradient_zero_iff_constant_under_kernel_support():
    mask = np.zeros((16, 16), dtype=bool)
    mask[3:13, 3:13] = True
    image = _solid_scene(mask, (10, 20, 30))
    # a pixel-value change outside the dilated support leaves the value 0
    image[0, 0] = (200, 0, 0)
    assert object_color_gradient(np.asarray(image), mask) == 0.0
    # but touching a pixel adjacent to the eroded core makes it nonzero
    image[4, 4] = (250, 250, 250)
    assert object_color_gradient(np.asarray(image), mask) > 0.0


def test_too_thin_object_reports_missing():
    mask = np.zeros((8, 8), dtype=bool)
    mask[4, 1:7] = True  # 1 px tall: erosion clears it
    with pytest.raises(EmptyAfterErosionError):
        object_color_gradient(_solid_scene(mask), mask)
    with pytest.raises(EmptyMaskError):
        object_color_gradient(_solid_scene(mask), np.zeros((8, 8), bool))


# --- shape concavity ------------------------------------------------------------


def test_rectangle_concavity_zero():
    mask = np.zeros((20, 20), dtype=bool)
    mask[3:15, 5:17] = True
    assert object_shape_concavity(mask) == 0.0


def test_l_shape_concavity_near_continuous_value():
    assert object_shape_concavity(l_shape_mask()) == pytest.approx(0.143, abs=0.03)


def test_concavity_scale_invariant_for_integer_upscale():
    base = l_shape_mask()
    v1 = object_shape_concavity(base)
    for factor in (2, 3, 4):
        scaled = np.kron(base, np.ones((factor, factor), dtype=bool))
        assert object_shape_concavity(scaled) == pytest.approx(v1, abs=0.02)


def test_concavity_tiny_masks_are_zero():
    m = np.zeros((5, 5), dtype=bool)
    m[1, 1] = m[3, 3] = True
    assert object_shape_concavity(m) == 0.0


def test_concavity_rotation_invariant():
    m = l_shape_mask()
    v = object_shape_concavity(m)
    for k in (1, 2, 3):
        assert object_shape_concavity(np.rot90(m, k)) == pytest.approx(v, abs=1e-12)


# --- candidates -----------------------------------------------------------------


def test_uniform_rectangle_candidates():
    mask = np.zeros((24, 24), dtype=bool)
    mask[4:16, 6:20] = True
    image = _solid_scene(mask, (200, 10, 10))
    c = object_candidate_factors(image, mask)
    assert c["color_count"] == 1
    assert c["non_rectangularity"] == 0.0
    assert c["discontinuity"] == 0.0
    # interior entropy is zero; boundary windows see the background color
    interior = np.zeros_like(mask)
    interior[5:15, 7:19] = True
    assert local_entropy(grayscale(image))[interior].max() == 0.0


def test_two_squares_discontinuity_half():
    mask = np.zeros((12, 12), dtype=bool)
    mask[1:4, 1:4] = True
    mask[7:10, 7:10] = True
    c = object_candidate_factors(_solid_scene(mask), mask)
    assert c["discontinuity"] == pytest.approx(0.5)


def test_large_circle_incompactness_small():
    y, x = np.mgrid[0:70, 0:70]
    disk = (x - 34.5) ** 2 + (y - 34.5) ** 2 <= 30**2
    c = object_candidate_factors(_solid_scene(disk), disk)
    assert 0.0 <= c["incompactness"] < 0.15


def test_entropy_matches_brute_force():
    rng = np.random.default_rng(5)
    gray = rng.integers(0, 4, (10, 10)).astype(float)
    assert np.allclose(local_entropy(gray), brute_entropy(gray))


def test_candidate_ranges_and_rotation_invariance(session_rng):
    from conftest import random_blob

    for _ in range(5):
        blob = random_blob(session_rng, 20)
        image = session_rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
        c = object_candidate_factors(np.asarray(image), blob)
        assert 0 <= c["non_rectangularity"] <= 1
        assert 0 <= c["incompactness"] <= 1
        assert 0 <= c["discontinuity"] <= 1
        assert 0 <= c["color_entropy"] <= 8
        assert c["decentralization"] >= 0
        r = object_candidate_factors(
            np.ascontiguousarray(np.rot90(image)), np.ascontiguousarray(np.rot90(blob))
        )
        for key in ("color_count", "non_rectangularity", "discontinuity"):
            assert r[key] == pytest.approx(c[key], abs=1e-12)


def test_decentralization_definition():
    mask = np.zeros((9, 9), dtype=bool)
    mask[2, 2] = mask[6, 6] = True
    c = object_candidate_factors(_solid_scene(mask), mask)
    # centroid (4, 4); each pixel contributes (2^2)*(2^2) = 16
    assert c["decentralization"] == pytest.approx(32.0)
