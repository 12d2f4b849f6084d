"""Binary-mask computational geometry.

Masks are 2-D boolean numpy arrays indexed ``[y, x]`` (row-major). Vertex and
pixel coordinates are ``(x, y)`` pairs referring to pixel centers, so the
polygon arithmetic below is exact integer arithmetic.

Conventions fixed here and relied on elsewhere:

* convex hulls are taken over pixel centers and rasterized with the rule
  "pixel center inside or on the polygon boundary";
* foreground components use 8-connectivity, enclosed background regions use
  4-connectivity (the standard duality);
* geodesic distances are 4-neighbor integer path lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    DisconnectedRegionError,
    EmptyDomainError,
    EmptyMaskError,
)

_STRUCT_8 = np.ones((3, 3), dtype=bool)
_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

# Step vectors for the 8 compass directions n*pi/4, n = 0..7, as (dx, dy).
_RAY_STEPS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


@dataclass(frozen=True)
class BoundingBox:
    """Tight axis-aligned pixel bounding box (inclusive coordinates)."""

    min_x: int
    min_y: int
    max_x: int
    max_y: int

    @property
    def width(self) -> int:
        return self.max_x - self.min_x + 1

    @property
    def height(self) -> int:
        return self.max_y - self.min_y + 1

    @property
    def diagonal(self) -> tuple[int, int]:
        """Diagonal vector (width, height) in pixels."""
        return (self.width, self.height)


@dataclass(frozen=True)
class ConvexHullResult:
    hull_mask: np.ndarray
    vertices: np.ndarray  # (k, 2) int array of (x, y) pixel centers, CCW


@dataclass(frozen=True)
class InscribedConvexResult:
    """Terminal state of the inscribed-convex-set iteration.

    ``hull`` and ``deficiency`` describe the final mask; ``deepest`` is the
    deficiency pixel (x, y) with maximal remaining depth, or ``None`` when
    the deficiency is empty.
    """

    mask: np.ndarray
    hull: np.ndarray
    deficiency: np.ndarray
    deepest: tuple[int, int] | None
    iterations: int
    final_depth: float


def as_mask(mask) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {m.shape}")
    return m


def bounding_box(mask) -> BoundingBox:
    """Tight bounding box of the set pixels."""
    m = as_mask(mask)
    ys, xs = np.nonzero(m)
    if ys.size == 0:
        raise EmptyMaskError("bounding_box of empty mask")
    return BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


def erode_boundary(mask, width: int = 1) -> np.ndarray:
    """Remove pixels whose 8-neighborhood crosses the mask boundary.

    The image border counts as outside the mask, so border pixels erode.
    ``width`` erosion passes; ``width=0`` is the identity.
    """
    m = as_mask(mask)
    if width < 0:
        raise ValueError("erosion width must be >= 0")
    if width == 0:
        return m.copy()
    return ndimage.binary_erosion(m, structure=_STRUCT_8, iterations=width, border_value=0)


def connected_components(mask, connectivity: int = 8) -> list[np.ndarray]:
    """Partition the set pixels into maximal connected components.

    Components are ordered by decreasing pixel count, ties broken by the
    first raster-order (top-left) pixel. Empty mask gives an empty list.
    """
    m = as_mask(mask)
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    structure = _STRUCT_8 if connectivity == 8 else _STRUCT_4
    labeled, n = ndimage.label(m, structure=structure)
    if n == 0:
        return []
    flat = labeled.ravel()
    counts = np.bincount(flat, minlength=n + 1)
    ids, first = np.unique(flat, return_index=True)
    first_index = dict(zip(ids.tolist(), first.tolist()))
    order = sorted(range(1, n + 1), key=lambda i: (-int(counts[i]), first_index[i]))
    return [labeled == i for i in order]


def subcontour_regions(background) -> list[np.ndarray]:
    """Regions enclosed by the background contour.

    These are the connected components (4-connectivity) of the background's
    complement; a region may contain several foreground objects, and regions
    touching the image border count. Blank foreground gives an empty list.
    """
    bg = as_mask(background)
    return connected_components(~bg, connectivity=4)


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull over integer (x, y) points, CCW.

    Collinear inputs degrade gracefully to the two extreme points; a single
    point is its own hull.
    """
    pts = np.unique(points, axis=0)  # sorts lexicographically by (x, y)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b) -> int:
        return int((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))

    def half(iterable):
        chain: list[np.ndarray] = []
        for p in iterable:
            while len(chain) >= 2 and cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:  # all points identical after unique -> impossible; collinear -> 2
        hull = [pts[0], pts[-1]]
    return np.array(hull, dtype=np.int64)


def _segment_pixels(p0, p1, shape) -> np.ndarray:
    """Pixels whose centers lie exactly on the segment between two centers."""
    out = np.zeros(shape, dtype=bool)
    dx, dy = int(p1[0] - p0[0]), int(p1[1] - p0[1])
    g = math.gcd(abs(dx), abs(dy))
    if g == 0:
        out[p0[1], p0[0]] = True
        return out
    sx, sy = dx // g, dy // g
    for t in range(g + 1):
        out[p0[1] + t * sy, p0[0] + t * sx] = True
    return out


def _rasterize_convex(vertices: np.ndarray, shape) -> np.ndarray:
    """Rasterize a CCW convex polygon: centers inside or on the boundary.

    Exact: all tests are integer cross products.
    """
    if len(vertices) == 1:
        out = np.zeros(shape, dtype=bool)
        out[vertices[0][1], vertices[0][0]] = True
        return out
    if len(vertices) == 2:
        return _segment_pixels(vertices[0], vertices[1], shape)

    min_x, min_y = vertices.min(axis=0)
    max_x, max_y = vertices.max(axis=0)
    xs = np.arange(min_x, max_x + 1, dtype=np.int64)
    ys = np.arange(min_y, max_y + 1, dtype=np.int64)
    gx, gy = np.meshgrid(xs, ys)
    inside = np.ones(gx.shape, dtype=bool)
    k = len(vertices)
    for i in range(k):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % k]
        inside &= (bx - ax) * (gy - ay) - (by - ay) * (gx - ax) >= 0
    out = np.zeros(shape, dtype=bool)
    out[min_y : max_y + 1, min_x : max_x + 1] = inside
    return out


def convex_hull(mask) -> ConvexHullResult:
    """Smallest convex polygon over the pixel centers, rasterized.

    Every input pixel is covered by the hull mask, and the operation is a
    fixpoint: ``convex_hull(hull_mask).hull_mask == hull_mask``.
    """
    m = as_mask(mask)
    ys, xs = np.nonzero(m)
    if ys.size == 0:
        raise EmptyMaskError("convex_hull of empty mask")
    points = np.stack([xs, ys], axis=1).astype(np.int64)
    vertices = _hull_vertices(points)
    hull_mask = _rasterize_convex(vertices, m.shape)
    return ConvexHullResult(hull_mask=hull_mask, vertices=vertices)


def constrained_distance_transform(domain, sources) -> np.ndarray:
    """Geodesic 4-neighbor distance from the sources inside the domain.

    Source pixels inside the domain get distance 0; pixels with no path
    through the domain (including all pixels when the sources lie outside
    it) are ``inf``. Pixels outside the domain are ``inf`` as well.
    """
    dom = as_mask(domain)
    src = as_mask(sources)
    if dom.shape != src.shape:
        raise ValueError("domain and sources must share a shape")
    if not dom.any():
        raise EmptyDomainError("empty domain")
    dist = np.full(dom.shape, np.inf)
    frontier = dom & src
    dist[frontier] = 0.0
    step = 0
    while frontier.any():
        step += 1
        grown = _dilate4(frontier) & dom & np.isinf(dist)
        dist[grown] = step
        frontier = grown
    return dist


def _dilate4(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def deficiency_depth(region, hull_mask) -> np.ndarray:
    """Geodesic depth of each convex-deficiency pixel.

    Depth of a deficiency pixel is its 4-neighbor geodesic distance to the
    hull exterior, with paths barred from crossing the region; pixels of a
    deficiency sealed inside the region (holes) are ``inf``. The array is
    ``nan`` outside the deficiency. Depth 1 means adjacent to the exterior
    (the image border counts as exterior).
    """
    reg = as_mask(region)
    hull = as_mask(hull_mask)
    deficiency = hull & ~reg
    out = np.full(reg.shape, np.nan)
    if not deficiency.any():
        return out
    pad_reg = np.pad(reg, 1)
    pad_hull = np.pad(hull, 1)
    dist = constrained_distance_transform(~pad_reg, ~pad_hull)
    inner = dist[1:-1, 1:-1]
    out[deficiency] = inner[deficiency]
    return out


def _ray_pixels(start_xy, step_xy, within: np.ndarray) -> np.ndarray:
    """Trace a straight pixel ray from start until it leaves ``within``."""
    out = np.zeros(within.shape, dtype=bool)
    h, w = within.shape
    x, y = start_xy
    dx, dy = step_xy
    while 0 <= x < w and 0 <= y < h and within[y, x]:
        out[y, x] = True
        x += dx
        y += dy
    return out


def _first_raster_index(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask.ravel())[0])


def _best_cut(region: np.ndarray, hull: np.ndarray, dc_xy) -> np.ndarray:
    """Cheapest removal among the 8 straight cuts through dc.

    A cut only counts as one when removing its ray pixels splits the region;
    the removal is then the ray plus everything but the largest surviving
    component, keeping the result connected. Area ties between surviving
    components keep the one with the larger top-left raster index (the
    smaller-top-left sub-region is removed). When no ray splits the region
    (e.g. cutting open a ring), the cheapest ray shave is taken instead, and
    as a last resort the region pixel nearest to dc is nibbled off, so every
    iteration removes at least one pixel.
    """
    area = int(region.sum())
    split_best: np.ndarray | None = None
    split_size = area
    shave_best: np.ndarray | None = None
    shave_size = area
    for step in _RAY_STEPS:
        ray = _ray_pixels(dc_xy, step, hull)
        cut = ray & region
        n_cut = int(cut.sum())
        remaining = region & ~cut
        comps = connected_components(remaining, connectivity=8)
        if len(comps) >= 2:
            keep = max(comps, key=lambda c: (int(c.sum()), _first_raster_index(c)))
            removal = region & ~keep
            size = int(removal.sum())
            if size < split_size:
                split_size = size
                split_best = removal
        elif 0 < n_cut < area and n_cut < shave_size:
            shave_size = n_cut
            shave_best = cut
    if split_best is not None:
        return split_best
    if shave_best is not None:
        return shave_best
    ys, xs = np.nonzero(region)
    d2 = (xs - dc_xy[0]) ** 2 + (ys - dc_xy[1]) ** 2
    i = int(np.argmin(d2))
    nibble = np.zeros(region.shape, dtype=bool)
    nibble[ys[i], xs[i]] = True
    return nibble


def inscribed_convex_result(region, max_depth: float = 3.0) -> InscribedConvexResult:
    """Approximately maximal convex subset of a connected region.

    Iteratively finds the deepest concavity of the convex deficiency and
    removes the cheapest of 8 straight cuts through it, until every
    deficiency pixel has geodesic depth at most ``max_depth``. The result is
    contained in the input and each iteration removes at least one pixel.
    """
    reg = as_mask(region)
    if not reg.any():
        raise EmptyMaskError("empty region")
    if len(connected_components(reg, connectivity=8)) != 1:
        raise DisconnectedRegionError("region must be connected")

    # Work on a padded bounding-box crop; all steps are translation-invariant.
    box = bounding_box(reg)
    y0, y1 = box.min_y, box.max_y + 1
    x0, x1 = box.min_x, box.max_x + 1
    current = reg[y0:y1, x0:x1].copy()

    iterations = 0
    budget = int(current.sum())
    while True:
        hull = convex_hull(current).hull_mask
        depth = deficiency_depth(current, hull)
        if np.all(np.isnan(depth)):
            max_d = 0.0
            dc_x = dc_y = -1
        else:
            max_d = float(np.nanmax(depth))
            flat = np.where(np.isnan(depth), -np.inf, depth).ravel()
            dc_y, dc_x = divmod(int(np.argmax(flat)), current.shape[1])
        if max_d <= max_depth:
            break
        removal = _best_cut(current, hull, (dc_x, dc_y))
        current &= ~removal
        iterations += 1
        if iterations > budget:
            raise RuntimeError("inscribed convex set failed to terminate")

    def uncrop(arr: np.ndarray) -> np.ndarray:
        out = np.zeros_like(reg)
        out[y0:y1, x0:x1] = arr
        return out

    return InscribedConvexResult(
        mask=uncrop(current),
        hull=uncrop(hull),
        deficiency=uncrop(hull & ~current),
        deepest=(dc_x + x0, dc_y + y0) if dc_x >= 0 else None,
        iterations=iterations,
        final_depth=max_d,
    )


def max_inscribed_convex_set(region) -> np.ndarray:
    """Mask of the approximately maximal inscribed convex set."""
    return inscribed_convex_result(region).mask


_MS_EDGE_LENGTH = np.array(
    [
        0.0,                 # 0000
        math.sqrt(2) / 2,    # single corner
        math.sqrt(2) / 2,
        1.0,                 # adjacent pair
        math.sqrt(2) / 2,
        1.0,
        math.sqrt(2),        # diagonal pair
        math.sqrt(2) / 2,    # triple = complement of single
        math.sqrt(2) / 2,
        math.sqrt(2),
        1.0,
        math.sqrt(2) / 2,
        1.0,
        math.sqrt(2) / 2,
        math.sqrt(2) / 2,
        0.0,                 # 1111
    ]
)


def boundary_length(mask) -> float:
    """Marching-squares contour length of the mask boundary.

    Far closer to the true perimeter than pixel-edge counting for diagonal
    boundaries (a 45-degree edge costs sqrt(2)/2 per cell, not 2).
    """
    m = np.pad(as_mask(mask), 1).astype(np.int8)
    cases = m[:-1, :-1] + 2 * m[:-1, 1:] + 4 * m[1:, :-1] + 8 * m[1:, 1:]
    return float(_MS_EDGE_LENGTH[cases].sum())


def boundary_pixels(mask) -> np.ndarray:
    """Mask pixels whose 8-neighborhood touches a non-mask pixel.

    The image border counts as non-mask.
    """
    m = as_mask(mask)
    return m & ~erode_boundary(m, 1)
