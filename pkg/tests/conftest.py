import numpy as np
import pytest

from segcomplexity.dataset import SceneRecord


def l_shape_mask(frame: int = 14) -> np.ndarray:
    """10x10 square minus its 5x5 top-right quarter: 75 px."""
    m = np.zeros((frame, frame), dtype=bool)
    m[2:12, 2:12] = True
    m[2:7, 7:12] = False
    return m


def random_blob(rng: np.random.Generator, size: int, fill: float = 0.45) -> np.ndarray:
    """A random connected blob: largest component of thresholded noise."""
    from scipy import ndimage

    noise = rng.random((size, size)) < fill
    noise = ndimage.binary_closing(noise, structure=np.ones((3, 3)))
    labeled, n = ndimage.label(noise, structure=np.ones((3, 3)))
    if n == 0:
        out = np.zeros((size, size), dtype=bool)
        out[size // 2, size // 2] = True
        return out
    counts = np.bincount(labeled.ravel())[1:]
    return labeled == (int(np.argmax(counts)) + 1)


def make_scene(spec: dict[int, tuple[np.ndarray, tuple[int, int, int]]],
               size: int = 64,
               background=(0, 0, 0)) -> SceneRecord:
    """Scene from {object_id: (mask, color)}; masks are full-frame booleans."""
    image = np.zeros((size, size, 3), dtype=np.uint8)
    image[:, :] = background
    labels = np.zeros((size, size), dtype=np.int32)
    for oid, (mask, color) in spec.items():
        labels[mask] = oid
        image[mask] = color
    return SceneRecord(id="scene", image=image, labels=labels)


def rect_mask(size: int, x0: int, y0: int, w: int, h: int) -> np.ndarray:
    m = np.zeros((size, size), dtype=bool)
    m[y0 : y0 + h, x0 : x0 + w] = True
    return m


@pytest.fixture(scope="session")
def session_rng():
    return np.random.default_rng(20240811)
