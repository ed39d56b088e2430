"""
Synthetic Shapes
Deterministic fixture clouds with analytically known contour points
"""

import logging
import math
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from .core import PointCloud
from .errors import BadParams

logger = logging.getLogger(__name__)

SHAPE_KINDS = ('line', 'polygon', 'circle', 'cube-faces', 'hinge', 'sphere', 'desk')

# Smallest point count each kind accepts
MINIMUM_POINTS = {
    'line': 3,
    'polygon': 3,
    'circle': 4,
    'cube-faces': 8,
    'hinge': 9,
    'sphere': 4,
    'desk': 50,
}

DEFAULT_POLYGON = [(0.0, 0.0, 0.0), (3.0, 0.0, 0.0), (3.0, 3.0, 0.0)]

ShapeBuilder = Callable[[int, Dict[str, Any], np.random.Generator],
                        Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]]


def make_shape(kind: str, n: int, params: Optional[Dict[str, Any]] = None) -> PointCloud:
    """
    Build a synthetic point cloud

    Lattice kinds (cube-faces, hinge with the default grid layout) treat n as
    a target and return the nearest complete lattice at or above it.

    Args:
        kind: One of SHAPE_KINDS
        n: Number of points (target count for lattice kinds)
        params: Shape parameters; 'seed' makes random layouts reproducible

    Returns:
        PointCloud
    """
    coords, _, attrs = _build(kind, n, params)
    names = ['texture'] if attrs is not None else []
    cloud = PointCloud(coords, attrs, names)
    logger.debug(f"Built {kind} fixture with {cloud.n_points} points")
    return cloud


def shape_contour(kind: str, n: int, params: Optional[Dict[str, Any]] = None) -> np.ndarray:
    """
    Boolean mask of the analytic contour points of a fixture

    The mask is aligned row for row with make_shape(kind, n, params).
    """
    _, mask, _ = _build(kind, n, params)
    return mask


def _build(kind: str, n: int, params: Optional[Dict[str, Any]]):
    params = dict(params or {})
    if kind not in _BUILDERS:
        raise BadParams(f"unknown shape kind '{kind}' (expected one of {SHAPE_KINDS})")
    if n < MINIMUM_POINTS[kind]:
        raise BadParams(f"{kind} needs at least {MINIMUM_POINTS[kind]} points, got {n}")
    rng = np.random.default_rng(params.get('seed', 0))
    return _BUILDERS[kind](int(n), params, rng)


def _line(n, params, rng):
    spacing = float(params.get('spacing', 1.0))
    if spacing <= 0:
        raise BadParams(f"line spacing must be positive, got {spacing}")
    start = np.asarray(params.get('start', (0.0, 0.0, 0.0)), dtype=float)
    direction = np.asarray(params.get('direction', (1.0, 0.0, 0.0)), dtype=float)
    direction = direction / np.linalg.norm(direction)
    coords = start + np.outer(np.arange(n) * spacing, direction)
    mask = np.zeros(n, dtype=bool)
    mask[[0, -1]] = True
    return coords, mask, None


def _polygon(n, params, rng):
    """Open polyline through the vertices, points equispaced by arc length"""
    vertices = np.asarray(params.get('vertices', DEFAULT_POLYGON), dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 3 or len(vertices) < 2:
        raise BadParams("polygon needs at least two 3-D vertices")
    segments = np.diff(vertices, axis=0)
    lengths = np.linalg.norm(segments, axis=1)
    if np.any(lengths == 0):
        raise BadParams("polygon has repeated consecutive vertices")
    if params.get('closed', False):
        raise BadParams("closed polygons are not supported; repeat the first vertex instead")

    units = segments / lengths[:, None]
    cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
    step = cumulative[-1] / (n - 1)
    coords = np.empty((n, 3))
    mask = np.zeros(n, dtype=bool)
    for k in range(n):
        t = k * step
        seg = min(int(np.searchsorted(cumulative, t, side='right')) - 1, len(lengths) - 1)
        coords[k] = vertices[seg] + (t - cumulative[seg]) * units[seg]
        # endpoints and samples landing on a corner vertex
        if np.min(np.abs(cumulative - t)) <= 1e-9 * cumulative[-1]:
            mask[k] = True
    return coords, mask, None


def _circle(n, params, rng):
    radius = float(params.get('radius', 1.0))
    if radius <= 0:
        raise BadParams(f"circle radius must be positive, got {radius}")
    center = np.asarray(params.get('center', (0.0, 0.0, 0.0)), dtype=float)
    angles = 2.0 * np.pi * np.arange(n) / n
    coords = center + radius * np.column_stack([np.cos(angles), np.sin(angles), np.zeros(n)])
    return coords, np.zeros(n, dtype=bool), None


def _cube_faces(n, params, rng):
    """Lattice on the full surface of a cube; contour = cube edges"""
    size = float(params.get('size', 1.0))
    m = params.get('per_edge')
    if m is None:
        m = 3
        while m ** 3 - (m - 2) ** 3 < n:
            m += 1
    m = int(m)
    if m < 2:
        raise BadParams(f"cube needs at least 2 points per edge, got {m}")

    grid = np.stack(np.meshgrid(np.arange(m), np.arange(m), np.arange(m), indexing='ij'),
                    axis=-1).reshape(-1, 3)
    on_face = (grid == 0) | (grid == m - 1)
    surface = on_face.any(axis=1)
    grid = grid[surface]
    boundary_count = on_face[surface].sum(axis=1)
    coords = grid * (size / (m - 1))
    return coords, boundary_count >= 2, None


def _hinge_grid(n, params, rng):
    width = float(params.get('width', 1.0))
    length = float(params.get('length', width))
    b = int(params.get('per_side', math.ceil(math.sqrt(n / 2.0))))
    if b < 3:
        raise BadParams(f"hinge needs at least 3 points per side, got {b}")
    a = int(params.get('per_fold', b))
    h_across = width / (b - 1)
    h_along = length / (a - 1)

    rows = []
    flags = []
    for j in range(a):
        y = j * h_along
        end_row = j in (0, a - 1)
        # horizontal plate, fold at i == 0
        for i in range(b):
            rows.append((i * h_across, y, 0.0))
            flags.append(end_row or i in (0, b - 1))
        # vertical plate shares the fold row
        for k in range(1, b):
            rows.append((0.0, y, k * h_across))
            flags.append(end_row or k == b - 1)
    coords = np.asarray(rows)
    return coords, np.asarray(flags, dtype=bool)


def _hinge_random(n, params, rng):
    width = float(params.get('width', 1.0))
    length = float(params.get('length', width))
    band = float(params.get('contour_band', 0.05 * width))
    half = n // 2
    u = rng.uniform(0.0, width, size=n)
    y = rng.uniform(0.0, length, size=n)
    coords = np.zeros((n, 3))
    coords[:half, 0] = u[:half]
    coords[half:, 2] = u[half:]
    coords[:, 1] = y
    mask = (u <= band) | (u >= width - band) | (y <= band) | (y >= length - band)
    return coords, mask


def _hinge(n, params, rng):
    """Two plates meeting at a right angle along the y axis"""
    layout = params.get('layout', 'grid')
    if layout == 'grid':
        coords, mask = _hinge_grid(n, params, rng)
    elif layout == 'random':
        coords, mask = _hinge_random(n, params, rng)
    else:
        raise BadParams(f"unknown hinge layout '{layout}'")

    attrs = None
    if params.get('texture', False):
        length = float(params.get('length', params.get('width', 1.0)))
        attrs = (coords[:, 1] < length / 2.0).astype(float)[:, None]
    return coords, mask, attrs


def _sphere(n, params, rng):
    radius = float(params.get('radius', 1.0))
    if radius <= 0:
        raise BadParams(f"sphere radius must be positive, got {radius}")
    center = np.asarray(params.get('center', (0.0, 0.0, 0.0)), dtype=float)
    directions = rng.normal(size=(n, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return center + radius * directions, np.zeros(n, dtype=bool), None


def _box_surfaces(lo, hi, height):
    """Top and four side rectangles of an axis-aligned box standing on z = 0"""
    (x0, y0), (x1, y1) = lo, hi
    return [
        # origin, u-edge, v-edge
        ((x0, y0, height), (x1 - x0, 0, 0), (0, y1 - y0, 0)),
        ((x0, y0, 0), (x1 - x0, 0, 0), (0, 0, height)),
        ((x0, y1, 0), (x1 - x0, 0, 0), (0, 0, height)),
        ((x0, y0, 0), (0, y1 - y0, 0), (0, 0, height)),
        ((x1, y0, 0), (0, y1 - y0, 0), (0, 0, height)),
    ]


def _desk(n, params, rng):
    """Floor with two boxes, sampled uniformly by surface area"""
    boxes = params.get('boxes', [((0.3, 0.3), (0.7, 0.6), 0.4),
                                 ((1.2, 0.4), (1.7, 0.8), 0.25)])
    floor = params.get('floor', (2.0, 1.0))
    band = float(params.get('contour_band', 0.03))

    patches = [((0.0, 0.0, 0.0), (floor[0], 0, 0), (0, floor[1], 0))]
    for lo, hi, height in boxes:
        patches.extend(_box_surfaces(lo, hi, height))
    patches = [tuple(np.asarray(p, dtype=float) for p in patch) for patch in patches]
    areas = np.array([np.linalg.norm(np.cross(u, v)) for _, u, v in patches])

    counts = rng.multinomial(n, areas / areas.sum())
    coords = []
    mask = []
    for (origin, u, v), count in zip(patches, counts):
        s = rng.uniform(size=count)
        t = rng.uniform(size=count)
        coords.append(origin + np.outer(s, u) + np.outer(t, v))
        lu, lv = np.linalg.norm(u), np.linalg.norm(v)
        mask.append((s * lu <= band) | ((1 - s) * lu <= band) |
                    (t * lv <= band) | ((1 - t) * lv <= band))
    coords = np.vstack(coords)
    mask = np.concatenate(mask)

    # floor points hidden under a box are not observable
    keep = np.ones(len(coords), dtype=bool)
    for lo, hi, _ in boxes:
        inside = ((coords[:, 0] > lo[0]) & (coords[:, 0] < hi[0]) &
                  (coords[:, 1] > lo[1]) & (coords[:, 1] < hi[1]) &
                  (coords[:, 2] == 0.0))
        keep &= ~inside
    return coords[keep], mask[keep], None


_BUILDERS: Dict[str, ShapeBuilder] = {
    'line': _line,
    'polygon': _polygon,
    'circle': _circle,
    'cube-faces': _cube_faces,
    'hinge': _hinge,
    'sphere': _sphere,
    'desk': _desk,
}


def split_views(cloud: PointCloud, overlap: float = 0.4, seed: Optional[int] = None,
                mode: str = 'random') -> Tuple[PointCloud, PointCloud]:
    """
    Split a scene into two partially overlapping views

    Args:
        cloud: Scene to split
        overlap: Fraction of points shared by both views
        seed: RNG seed
        mode: 'random' assigns each point independently; 'halfspace' splits
            along x with a shared band of the requested fraction

    Returns:
        (view_a, view_b)
    """
    if not 0.0 < overlap <= 1.0:
        raise BadParams(f"overlap must lie in (0, 1], got {overlap}")
    n = cloud.n_points
    if mode == 'random':
        rng = np.random.default_rng(seed)
        u = rng.uniform(size=n)
        side = (1.0 - overlap) / 2.0
        in_a = u < side + overlap
        in_b = u >= side
    elif mode == 'halfspace':
        order = np.argsort(cloud.coords[:, 0], kind='stable')
        rank = np.empty(n)
        rank[order] = np.arange(n) / n
        side = (1.0 - overlap) / 2.0
        in_a = rank < side + overlap
        in_b = rank >= side
    else:
        raise BadParams(f"unknown split mode '{mode}'")
    return cloud.select(np.flatnonzero(in_a)), cloud.select(np.flatnonzero(in_b))
