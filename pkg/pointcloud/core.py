"""
Point Cloud Core
Point-cloud and rigid-transform types plus the normalization operations
"""

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import (
    BadParams,
    ConvergenceFailure,
    DegenerateCloud,
    DimensionMismatch,
    EmptyCloud,
    InvalidRotation,
)

logger = logging.getLogger(__name__)

THREADS_ENV = 'GRAPH_RESAMPLING_THREADS'


def default_workers() -> int:
    """Worker count for k-d tree queries, taken from the environment"""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        workers = int(value)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={value!r}")
        return 1
    # cKDTree treats -1 as "all cores"
    return workers if workers != 0 else 1


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    N points with a 3-column coordinate block and optional attributes

    The arrays are copied and made read-only on construction, so a cloud
    can be shared freely between callers.
    """
    coords: np.ndarray
    attrs: Optional[np.ndarray] = None
    attr_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise DimensionMismatch(f"coords must be N x 3, got shape {coords.shape}")
        if coords.shape[0] == 0:
            raise EmptyCloud("point cloud has no points")

        if self.attrs is None:
            attrs = np.zeros((coords.shape[0], 0))
        else:
            attrs = np.asarray(self.attrs, dtype=float)
            if attrs.ndim == 1:
                attrs = attrs[:, None]
            if attrs.shape[0] != coords.shape[0]:
                raise DimensionMismatch(
                    f"attrs has {attrs.shape[0]} rows, coords has {coords.shape[0]}"
                )

        if not (np.all(np.isfinite(coords)) and np.all(np.isfinite(attrs))):
            raise BadParams("point cloud contains NaN or Inf entries")

        names = list(self.attr_names)
        if names and len(names) != attrs.shape[1]:
            raise DimensionMismatch(
                f"{len(names)} attribute names for {attrs.shape[1]} attribute columns"
            )
        if not names:
            names = [f"attr{i}" for i in range(attrs.shape[1])]

        object.__setattr__(self, 'coords', _frozen(coords))
        object.__setattr__(self, 'attrs', _frozen(attrs))
        object.__setattr__(self, 'attr_names', names)

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def n_attrs(self) -> int:
        return self.attrs.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """Full N x K matrix [coords attrs]"""
        return np.hstack([self.coords, self.attrs])

    def with_coords(self, coords: np.ndarray) -> 'PointCloud':
        return PointCloud(coords, self.attrs, self.attr_names)

    def with_attrs(self, attrs: np.ndarray, attr_names: Sequence[str] = ()) -> 'PointCloud':
        return PointCloud(self.coords, attrs, list(attr_names))

    def select(self, indices: Sequence[int]) -> 'PointCloud':
        """Rows at the given indices, in the given order"""
        indices = np.asarray(indices, dtype=int)
        return PointCloud(self.coords[indices], self.attrs[indices], self.attr_names)

    def __len__(self) -> int:
        return self.n_points


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """
    Rotation plus shift acting on row vectors as x -> x R + a
    """
    rotation: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=float)
        shift = np.asarray(self.shift, dtype=float).reshape(-1)
        if rotation.shape != (3, 3) or shift.shape != (3,):
            raise DimensionMismatch(
                f"rotation must be 3 x 3 and shift length 3, got {rotation.shape} and {shift.shape}"
            )
        object.__setattr__(self, 'rotation', _frozen(rotation))
        object.__setattr__(self, 'shift', _frozen(shift))

    @classmethod
    def identity(cls) -> 'RigidTransform':
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], degrees: float,
                        shift: Sequence[float] = (0.0, 0.0, 0.0)) -> 'RigidTransform':
        """
        Counter-clockwise rotation about an axis, in the row-vector convention

        Args:
            axis: Rotation axis (normalized internally)
            degrees: Rotation angle in degrees
            shift: Translation applied after the rotation

        Returns:
            RigidTransform
        """
        axis = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise BadParams("rotation axis must be nonzero")
        rotvec = axis / norm * np.deg2rad(degrees)
        # scipy matrices act on column vectors
        rotation = Rotation.from_rotvec(rotvec).as_matrix().T
        return cls(rotation, np.asarray(shift, dtype=float))

    @classmethod
    def random(cls, rng: np.random.Generator, max_degrees: Optional[float] = None,
               max_shift: float = 1.0) -> 'RigidTransform':
        """Random proper rotation (optionally bounded in angle) and random shift"""
        if max_degrees is None:
            quat = rng.normal(size=4)
            rotation = Rotation.from_quat(quat / np.linalg.norm(quat)).as_matrix()
        else:
            axis = rng.normal(size=3)
            angle = rng.uniform(-max_degrees, max_degrees)
            rotation = cls.from_axis_angle(axis, angle).rotation
        shift = rng.uniform(-max_shift, max_shift, size=3)
        return cls(rotation, shift)

    def inverse(self) -> 'RigidTransform':
        rt = self.rotation.T
        return RigidTransform(rt, -self.shift @ rt)

    def compose(self, other: 'RigidTransform') -> 'RigidTransform':
        """Transform that applies self first, then other"""
        return RigidTransform(self.rotation @ other.rotation,
                              self.shift @ other.rotation + other.shift)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation + self.shift

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))))

    def to_dict(self):
        """Convert to dictionary for JSON serialization"""
        return {
            'rotation': self.rotation.tolist(),
            'shift': self.shift.tolist()
        }


def recenter(cloud: PointCloud) -> PointCloud:
    """Move the coordinate centroid to the origin; attributes untouched"""
    coords = cloud.coords - cloud.coords.mean(axis=0)
    return cloud.with_coords(coords)


def spectral_norm(matrix: np.ndarray, rtol: float = 1e-10, max_iter: int = 10000) -> float:
    """
    Largest singular value by power iteration on M^T M

    Args:
        matrix: N x d real matrix
        rtol: Relative tolerance on the Rayleigh quotient
        max_iter: Iteration cap

    Returns:
        Spectral norm of the matrix
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got {m.ndim} dimensions")
    if m.size == 0 or not np.any(m):
        return 0.0

    gram = m.T @ m
    # deterministic start, not orthogonal to any coordinate axis
    v = np.linspace(1.0, 2.0, gram.shape[0])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for iteration in range(1, max_iter + 1):
        w = gram @ v
        updated = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # start vector in the null space; restart on a basis vector
            v = np.zeros_like(v)
            v[np.argmax(np.abs(gram).sum(axis=0))] = 1.0
            continue
        v = w / norm_w
        if abs(updated - estimate) <= rtol * abs(updated):
            logger.debug(f"spectral_norm converged after {iteration} iterations")
            return float(np.sqrt(max(updated, 0.0)))
        estimate = updated

    raise ConvergenceFailure(f"spectral norm did not converge in {max_iter} iterations")


def scale_normalize(cloud: PointCloud, c: float = 1.0) -> PointCloud:
    """
    Uniformly scale coordinates so their spectral norm equals c

    Args:
        cloud: Input cloud
        c: Target spectral norm (positive)

    Returns:
        Scaled cloud with attributes unchanged
    """
    if c <= 0:
        raise BadParams(f"target norm must be positive, got {c}")
    current = spectral_norm(cloud.coords)
    if current == 0.0:
        raise DegenerateCloud("cannot normalize an all-zero coordinate matrix")
    return cloud.with_coords(cloud.coords * (c / current))


def apply_transform(cloud: PointCloud, transform: RigidTransform, tol: float = 1e-6) -> PointCloud:
    """Rotate then shift the coordinates; rejects non-proper rotations"""
    error = transform.orthonormality_error()
    if error > tol:
        raise InvalidRotation(f"rotation deviates from orthonormal by {error:.3e}")
    det = np.linalg.det(transform.rotation)
    if abs(det - 1.0) > tol:
        raise InvalidRotation(f"rotation determinant is {det:.6f}, expected +1")
    return cloud.with_coords(transform.apply(cloud.coords))


def add_gaussian_noise(cloud: PointCloud, variance: float, seed: Optional[int] = None) -> PointCloud:
    """Independent zero-mean Gaussian noise on every coordinate"""
    if variance < 0:
        raise BadParams(f"noise variance must be nonnegative, got {variance}")
    rng = np.random.default_rng(seed)
    noise = rng.normal(scale=np.sqrt(variance), size=cloud.coords.shape)
    return cloud.with_coords(cloud.coords + noise)
