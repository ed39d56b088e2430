"""
Point cloud resampling library
"""

from .core import (
    PointCloud,
    RigidTransform,
    add_gaussian_noise,
    apply_transform,
    recenter,
    scale_normalize,
    spectral_norm,
)
from .errors import PointCloudError
from .graph import (
    ShiftOperator,
    SparseGraph,
    build_graph,
    lambda_max,
    shift_operator,
    truncated_eigenbasis,
)
from .io import load_cloud, save_cloud
from .shapes import make_shape, shape_contour, split_views

__all__ = [
    'PointCloud',
    'RigidTransform',
    'PointCloudError',
    'ShiftOperator',
    'SparseGraph',
    'add_gaussian_noise',
    'apply_transform',
    'build_graph',
    'lambda_max',
    'load_cloud',
    'make_shape',
    'recenter',
    'save_cloud',
    'scale_normalize',
    'shape_contour',
    'shift_operator',
    'spectral_norm',
    'split_views',
    'truncated_eigenbasis',
]
