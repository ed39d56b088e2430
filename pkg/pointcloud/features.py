"""
Feature Extraction
Per-point features that drive resampling: local variation, pairwise variation, difference of normals
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud, default_workers
from .errors import BadParams, DimensionMismatch, InsufficientNeighbors
from .filters import GraphFilter, apply_filter, haar_highpass, is_shift_invariant
from .graph import ShiftOperator, SparseGraph

logger = logging.getLogger(__name__)

FEATURE_KINDS = ('raw', 'local-variation', 'pairwise-variation', 'don')


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """
    Feature rows f(X)

    values is N x K for raw features and an N-vector of nonnegative
    magnitudes for the variation kinds.
    """
    values: np.ndarray
    kind: str = 'raw'

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise BadParams(f"unknown feature kind '{self.kind}'")
        values = np.array(self.values, dtype=float, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    def as_matrix(self) -> np.ndarray:
        return self.values if self.values.ndim == 2 else self.values[:, None]

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.as_matrix(), axis=1)


def feature_matrix(features) -> np.ndarray:
    """N x K view of a FeatureVector or array"""
    if isinstance(features, FeatureVector):
        return features.as_matrix()
    F = np.asarray(features, dtype=float)
    if F.ndim == 1:
        return F[:, None]
    if F.ndim != 2:
        raise DimensionMismatch(f"features must be 1-D or 2-D, got {F.ndim} dimensions")
    return F


def _signal(cloud: PointCloud, include_attrs: bool) -> np.ndarray:
    return cloud.matrix if include_attrs else cloud.coords


def filter_response(filt: GraphFilter, cloud: PointCloud, include_attrs: bool = False) -> FeatureVector:
    """Raw feature rows h(A) X for any graph filter"""
    if filt.shift.n != cloud.n_points:
        raise DimensionMismatch(f"shift has {filt.shift.n} nodes, cloud has {cloud.n_points} points")
    return FeatureVector(apply_filter(filt, _signal(cloud, include_attrs)), 'raw')


def local_variation(shift: ShiftOperator, cloud: PointCloud, include_attrs: bool = False,
                    filt: Optional[GraphFilter] = None) -> FeatureVector:
    """
    Squared norm of each point's high-pass response

    With the default Haar filter this is ||x_i - sum_j A_ij x_j||^2, the
    distance from a point to the weighted average of its neighbours.

    Args:
        shift: Transition shift over the cloud's graph
        cloud: Input cloud
        include_attrs: Append attribute columns to the coordinates
        filt: Alternative high-pass filter; must annihilate constants

    Returns:
        FeatureVector of kind 'local-variation'
    """
    if filt is None:
        filt = haar_highpass(shift)
    elif not is_shift_invariant(filt):
        raise BadParams(f"{filt.describe()} does not annihilate constant signals")
    response = filter_response(filt, cloud, include_attrs).values
    return FeatureVector(np.sum(response ** 2, axis=1), 'local-variation')


def pairwise_variation(graph: SparseGraph, cloud: PointCloud) -> FeatureVector:
    """Per-point share sum_j W_ij ||x_i - x_j||^2 of the Laplacian quadratic form"""
    if graph.n != cloud.n_points:
        raise DimensionMismatch(f"graph has {graph.n} nodes, cloud has {cloud.n_points} points")
    W = graph.adjacency.tocoo()
    diff = cloud.coords[W.row] - cloud.coords[W.col]
    contrib = W.data * np.sum(diff ** 2, axis=1)
    return FeatureVector(np.bincount(W.row, weights=contrib, minlength=graph.n), 'pairwise-variation')


def _pca_normal(points: np.ndarray) -> np.ndarray:
    centered = points - points.mean(axis=0)
    _, vectors = np.linalg.eigh(centered.T @ centered)
    return vectors[:, 0]


def don_scores(cloud: PointCloud, r_small: float, r_large: float, min_neighbors: int = 3,
               workers: Optional[int] = None) -> FeatureVector:
    """
    Difference-of-normals contour score

    Normals come from neighbourhood PCA at two radii; the small-scale normal
    is flipped to agree with the large-scale one before differencing.

    Args:
        cloud: Input cloud
        r_small: Small neighbourhood radius
        r_large: Large neighbourhood radius (strictly greater)
        min_neighbors: Minimum number of other points within r_small
        workers: k-d tree query workers

    Returns:
        FeatureVector of kind 'don' with scores in [0, 1]
    """
    if r_small <= 0 or r_large <= 0 or r_small >= r_large:
        raise BadParams(f"need 0 < r_small < r_large, got {r_small} and {r_large}")

    coords = cloud.coords
    tree = cKDTree(coords)
    workers = workers or default_workers()
    small = tree.query_ball_point(coords, r_small, workers=workers)
    large = tree.query_ball_point(coords, r_large, workers=workers)

    # query_ball_point includes the query point itself
    sizes = np.array([len(nbrs) - 1 for nbrs in small])
    short = np.flatnonzero(sizes < min_neighbors)
    if len(short):
        raise InsufficientNeighbors(
            f"{len(short)} points have fewer than {min_neighbors} neighbours within "
            f"r_small={r_small} (first: point {int(short[0])})"
        )

    scores = np.empty(cloud.n_points)
    for i in range(cloud.n_points):
        n_small = _pca_normal(coords[small[i]])
        n_large = _pca_normal(coords[large[i]])
        if n_small @ n_large < 0:
            n_small = -n_small
        scores[i] = np.linalg.norm(n_small - n_large) / 2.0
    return FeatureVector(scores, 'don')


def top_fraction_mask(scores, fraction: float = 0.1) -> np.ndarray:
    """Mask of the ceil(fraction * N) highest-scoring points"""
    if not 0.0 < fraction <= 1.0:
        raise BadParams(f"fraction must lie in (0, 1], got {fraction}")
    values = scores.values if isinstance(scores, FeatureVector) else np.asarray(scores, dtype=float)
    values = values if values.ndim == 1 else np.linalg.norm(values, axis=1)
    count = math.ceil(fraction * len(values))
    order = np.argsort(-values, kind='stable')
    mask = np.zeros(len(values), dtype=bool)
    mask[order[:count]] = True
    return mask


def contour_recall(indices: Sequence[int], contour: np.ndarray) -> float:
    """Fraction of contour points present among the sampled indices"""
    contour = np.asarray(contour, dtype=bool)
    total = int(contour.sum())
    if total == 0:
        return 0.0
    unique = np.unique(np.asarray(indices, dtype=int))
    return float(contour[unique].sum()) / total


def contour_hit_rate(indices: Sequence[int], contour: np.ndarray) -> float:
    """Fraction of draws that land on contour points"""
    indices = np.asarray(indices, dtype=int)
    if len(indices) == 0:
        return 0.0
    return float(np.mean(np.asarray(contour, dtype=bool)[indices]))
