"""Procedural multi-object scene generators.

Two families of 128x128 scenes with instance masks:

``simple``
    Sprite-style scenes: 2-6 single-color convex shapes of similar size,
    well-separated colors, black background. Scores low on every
    complexity factor.

``textured``
    Scenes with concave, two-tone-textured, size-varied objects drawn from
    a narrow color band, on a striped or noisy background. Scores high on
    the foreground factors, and its bounded palette keeps the
    background-similarity assignment cheap.

Textured scenes place objects on a 2x2 cell grid with margins sized so that
convex-hull growth and rescaling to the mean diagonal both stay inside a
cell: hulls never collide and no object ever clips the frame.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import DatasetManifest, SceneRecord, finalize_dataset, write_scene_files

SIZE = 128

_SIMPLE_PALETTE = np.array(
    [
        (230, 25, 25),
        (25, 230, 25),
        (25, 25, 230),
        (230, 230, 25),
        (230, 25, 230),
        (25, 230, 230),
        (240, 240, 240),
        (240, 130, 20),
        (130, 20, 240),
        (20, 240, 130),
        (240, 20, 130),
        (130, 240, 20),
    ],
    dtype=np.int64,
)

_TEXTURED_BASE = np.array((150, 110, 80), dtype=np.int64)
_BG_BASE = np.array((60, 70, 90), dtype=np.int64)


# --- shape masks -------------------------------------------------------------


def _ellipse(w: int, h: int) -> np.ndarray:
    y, x = np.mgrid[0:h, 0:w]
    cx, cy = (w - 1) / 2, (h - 1) / 2
    return ((x - cx) / (w / 2)) ** 2 + ((y - cy) / (h / 2)) ** 2 <= 1.0


def _rectangle(w: int, h: int) -> np.ndarray:
    return np.ones((h, w), dtype=bool)


def _diamond(w: int, h: int) -> np.ndarray:
    y, x = np.mgrid[0:h, 0:w]
    cx, cy = (w - 1) / 2, (h - 1) / 2
    return np.abs(x - cx) / (w / 2) + np.abs(y - cy) / (h / 2) <= 1.0


def _triangle(w: int, h: int) -> np.ndarray:
    y, x = np.mgrid[0:h, 0:w]
    # Apex centered on the top edge, base along the bottom.
    half = (w - 1) / 2
    return np.abs(x - half) <= half * (y + 1) / h


def _l_shape(w: int, h: int) -> np.ndarray:
    m = np.ones((h, w), dtype=bool)
    m[: h // 2, w // 2 :] = False
    return m


def _u_shape(w: int, h: int) -> np.ndarray:
    m = np.ones((h, w), dtype=bool)
    m[: (2 * h) // 3, w // 3 : (2 * w) // 3] = False
    return m


def _t_shape(w: int, h: int) -> np.ndarray:
    m = np.zeros((h, w), dtype=bool)
    m[: h // 3, :] = True
    m[:, w // 3 : (2 * w) // 3] = True
    return m


def _plus(w: int, h: int) -> np.ndarray:
    m = np.zeros((h, w), dtype=bool)
    m[h // 3 : (2 * h) // 3, :] = True
    m[:, w // 3 : (2 * w) // 3] = True
    return m


def _notched(w: int, h: int) -> np.ndarray:
    m = np.ones((h, w), dtype=bool)
    m[h // 4 : (3 * h) // 4, (2 * w) // 3 :] = False
    return m


_CONVEX_SHAPES = (_ellipse, _rectangle, _diamond, _triangle)
_CONCAVE_SHAPES = (_l_shape, _u_shape, _t_shape, _plus, _notched)


def _oriented(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    mask = np.rot90(mask, k=int(rng.integers(4)))
    if rng.integers(2):
        mask = mask[:, ::-1]
    return np.ascontiguousarray(mask)


# --- fills -------------------------------------------------------------------


def _two_tone(shape, c1, c2, rng: np.random.Generator) -> np.ndarray:
    h, w = shape
    y, x = np.mgrid[0:h, 0:w]
    kind = int(rng.integers(3))
    period = int(rng.integers(4, 9))
    if kind == 0:
        band = (x // period) % 2
    elif kind == 1:
        band = ((x + y) // period) % 2
    else:
        band = rng.integers(0, 2, size=(h, w))
    return np.where(band[..., None] == 0, c1, c2).astype(np.uint8)


def _jitter(base: np.ndarray, amount: int, rng: np.random.Generator) -> np.ndarray:
    return np.clip(base + rng.integers(-amount, amount + 1, size=3), 0, 255)


# --- scene builders ----------------------------------------------------------


def simple_scene(scene_id: str, rng: np.random.Generator) -> SceneRecord:
    """Sprite scene: uniform-color convex objects, similar sizes, black bg."""
    image = np.zeros((SIZE, SIZE, 3), dtype=np.uint8)
    labels = np.zeros((SIZE, SIZE), dtype=np.int32)
    k = int(rng.integers(2, 7))
    palette = rng.permutation(len(_SIMPLE_PALETTE))[:k]
    placed = 0
    occupied: list[tuple[int, int, int, int]] = []
    attempts = 0
    while placed < k and attempts < 400:
        attempts += 1
        shape_fn = _CONVEX_SHAPES[int(rng.integers(len(_CONVEX_SHAPES)))]
        mask = _oriented(
            shape_fn(int(rng.integers(24, 31)), int(rng.integers(24, 31))), rng
        )
        h, w = mask.shape
        x0 = int(rng.integers(1, SIZE - w - 1))
        y0 = int(rng.integers(1, SIZE - h - 1))
        box = (x0 - 2, y0 - 2, x0 + w + 2, y0 + h + 2)
        if any(
            box[0] < b[2] and b[0] < box[2] and box[1] < b[3] and b[1] < box[3]
            for b in occupied
        ):
            continue
        color = np.clip(
            _SIMPLE_PALETTE[palette[placed]] + rng.integers(-10, 11, size=3), 0, 255
        )
        window = labels[y0 : y0 + h, x0 : x0 + w]
        window[mask] = placed + 1
        image[y0 : y0 + h, x0 : x0 + w][mask] = color.astype(np.uint8)
        occupied.append(box)
        placed += 1
    return SceneRecord(id=scene_id, image=image, labels=labels)


def textured_scene(scene_id: str, rng: np.random.Generator) -> SceneRecord:
    """Concave textured objects from a tight color band on a textured bg."""
    bg1 = _jitter(_BG_BASE, 12, rng)
    bg2 = np.clip(bg1 + rng.integers(14, 25), 0, 255)
    image = _two_tone((SIZE, SIZE), bg1, bg2, rng)
    labels = np.zeros((SIZE, SIZE), dtype=np.int32)

    cells = [(0, 0), (64, 0), (0, 64), (64, 64)]
    k = int(rng.integers(2, 5))
    chosen = rng.permutation(4)[:k]
    for idx, cell_index in enumerate(sorted(chosen.tolist())):
        cx0, cy0 = cells[cell_index]
        shape_fn = _CONCAVE_SHAPES[int(rng.integers(len(_CONCAVE_SHAPES)))]
        # Near-square boxes: isotropic rescaling can then equalize diagonal
        # vectors, not just their norms. Sizes still vary widely.
        bw = int(rng.integers(16, 35))
        bh = int(np.clip(bw + rng.integers(-3, 4), 16, 34))
        mask = _oriented(shape_fn(bw, bh), rng)
        h, w = mask.shape
        # Center the box in its 64x64 cell (plus a little jitter) so that the
        # hull and the rescaled version both stay inside the cell.
        jx = int(rng.integers(-2, 3))
        jy = int(rng.integers(-2, 3))
        x0 = cx0 + (64 - w) // 2 + jx
        y0 = cy0 + (64 - h) // 2 + jy

        c1 = _jitter(_TEXTURED_BASE, 25, rng)
        c2 = np.clip(c1 + rng.integers(12, 25), 0, 255)
        fill = _two_tone((h, w), c1, c2, rng)
        window_l = labels[y0 : y0 + h, x0 : x0 + w]
        window_i = image[y0 : y0 + h, x0 : x0 + w]
        window_l[mask] = idx + 1
        window_i[mask] = fill[mask]
    return SceneRecord(id=scene_id, image=image, labels=labels)


_BUILDERS = {"simple": simple_scene, "textured": textured_scene}


def generate_scene(kind: str, scene_id: str, rng: np.random.Generator) -> SceneRecord:
    return _BUILDERS[kind](scene_id, rng)


def generate_scenes(kind: str, n: int, seed: int = 0) -> list[SceneRecord]:
    """``n`` scenes in memory; scene i uses generator (seed, i)."""
    return [
        generate_scene(kind, f"{i:05d}", np.random.default_rng([seed, i]))
        for i in range(n)
    ]


def make_corpus(
    root: Path, kind: str, n: int, seed: int = 0, split: str = "train"
) -> DatasetManifest:
    """Generate and write a corpus without holding it all in memory."""
    root = Path(root)
    ids = []
    for i in range(n):
        scene = generate_scene(kind, f"{i:05d}", np.random.default_rng([seed, i]))
        write_scene_files(root, scene)
        ids.append(scene.id)
    return finalize_dataset(
        root, ids, provenance={"generator": kind, "seed": seed}, split=split
    )
