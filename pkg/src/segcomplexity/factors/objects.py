"""Per-object complexity factors.

Two primary factors (color gradient and shape concavity) plus six
exploratory candidates. All are pure functions of an RGB image and a
boolean object mask; translating the object translates nothing.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .. import geometry
from ..errors import EmptyAfterErosionError, EmptyMaskError

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T


def grayscale(image: np.ndarray) -> np.ndarray:
    """Broadcast luma (0.299 R + 0.587 G + 0.114 B), rounded half-up."""
    img = np.asarray(image, dtype=np.float64)
    gray = 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
    return np.floor(gray + 0.5)


def sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    """Magnitude of the 3x3 Sobel gradient at every pixel."""
    gx = ndimage.convolve(gray, _SOBEL_X, mode="reflect")
    gy = ndimage.convolve(gray, _SOBEL_Y, mode="reflect")
    return np.sqrt(gx * gx + gy * gy)


def object_color_gradient(
    image: np.ndarray,
    mask: np.ndarray,
    sobel: np.ndarray | None = None,
) -> float:
    """Mean Sobel gradient magnitude inside the eroded object mask.

    One 8-connected erosion pass removes the boundary ring, so every pixel
    that enters the mean has its full 3x3 stencil inside the original mask
    and the surroundings cannot leak in. Raises when nothing survives the
    erosion; too-thin objects have no gradient value, not a zero one.

    A precomputed ``sobel_magnitude`` map may be passed to share work
    between objects and the background of the same image.
    """
    m = geometry.as_mask(mask)
    if not m.any():
        raise EmptyMaskError("empty object mask")
    core = geometry.erode_boundary(m, 1)
    if not core.any():
        raise EmptyAfterErosionError("object too thin for a gradient value")
    if sobel is None:
        sobel = sobel_magnitude(grayscale(image))
    return float(sobel[core].mean())


def object_shape_concavity(mask: np.ndarray) -> float:
    """One minus the object's area fraction of its convex hull, in [0, 1]."""
    m = geometry.as_mask(mask)
    n = int(m.sum())
    if n == 0:
        raise EmptyMaskError("empty object mask")
    if n < 3:
        return 0.0
    hull = geometry.convex_hull(m).hull_mask
    return 1.0 - n / int(hull.sum())


def local_entropy(gray: np.ndarray) -> np.ndarray:
    """Shannon entropy (bits) of each pixel's 3x3 gray-value neighborhood.

    Windows are clipped at the image border, so corner pixels see 4 values.
    """
    g = np.asarray(gray)
    h, w = g.shape
    padded = np.full((h + 2, w + 2), -1, dtype=np.int64)
    padded[1:-1, 1:-1] = g.astype(np.int64)
    stack = np.stack(
        [padded[dy : dy + h, dx : dx + w] for dy in range(3) for dx in range(3)],
        axis=0,
    )
    out = np.zeros((h, w), dtype=np.float64)
    # Count multiplicities of each window value against the 9 slots.
    for s in range(9):
        matches = (stack == stack[s]) & (stack[s] >= 0)
        counts = matches.sum(axis=0)
        valid = (stack >= 0).sum(axis=0)
        p = np.where(stack[s] >= 0, counts / np.maximum(valid, 1), 0.0)
        contrib = np.where(p > 0, -np.log2(np.maximum(p, 1e-300)) * (1.0 / np.maximum(valid, 1)), 0.0)
        out += contrib
    return out


def _perimeter(mask: np.ndarray) -> float:
    return geometry.boundary_length(mask)


def object_candidate_factors(image: np.ndarray, mask: np.ndarray) -> dict[str, float]:
    """The six exploratory per-object factors.

    color_count        distinct RGB colors inside the mask
    color_entropy      mean 3x3 gray-value entropy over mask pixels (bits)
    non_rectangularity 1 - area / bounding-box area
    incompactness      1 - 4*pi*A/P^2 (Polsby-Popper), clamped at 0
    discontinuity      1 - largest-component area / total area
    decentralization   sum of (x-cx)^2 (y-cy)^2 over mask pixels
    """
    m = geometry.as_mask(mask)
    if not m.any():
        raise EmptyMaskError("empty object mask")
    img = np.asarray(image, dtype=np.uint8)

    pixels = img[m].reshape(-1, 3)
    color_count = int(np.unique(pixels, axis=0).shape[0])

    entropy = local_entropy(grayscale(img))
    color_entropy = float(entropy[m].mean())

    box = geometry.bounding_box(m)
    non_rect = 1.0 - float(m.sum()) / (box.width * box.height)

    area = float(m.sum())
    perimeter = _perimeter(m)
    pp = 4.0 * np.pi * area / (perimeter * perimeter) if perimeter > 0 else 1.0
    incompactness = max(0.0, 1.0 - pp)

    largest = geometry.connected_components(m, connectivity=8)[0]
    discontinuity = 1.0 - float(largest.sum()) / area

    ys, xs = np.nonzero(m)
    cx, cy = xs.mean(), ys.mean()
    decentralization = float((((xs - cx) ** 2) * ((ys - cy) ** 2)).sum())

    return {
        "color_count": float(color_count),
        "color_entropy": color_entropy,
        "non_rectangularity": non_rect,
        "incompactness": incompactness,
        "discontinuity": discontinuity,
        "decentralization": decentralization,
    }
