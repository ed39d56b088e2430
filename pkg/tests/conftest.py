"""
Shared fixtures: synthetic clouds with hand-picked graph scales

Grid fixtures use tau just above the lattice spacing so that each point is
joined to its lattice neighbours only.
"""

import numpy as np
import pytest
import scipy.sparse as sp

from pointcloud.core import PointCloud
from pointcloud.graph import SparseGraph, build_graph, shift_operator
from pointcloud.shapes import make_shape, shape_contour

SPHERE_PARAMS = {'radius': 0.3182, 'center': (0.0833, 0.1903, 1.1725)}

HINGE_POINTS = 800
HINGE_SPACING = 1.0 / 19.0   # 20 points across each unit plate
CUBE_SPACING = 0.2           # 6 points per unit edge


def graph_from_dense(W: np.ndarray) -> SparseGraph:
    """SparseGraph from an explicit symmetric weight matrix"""
    W = np.asarray(W, dtype=float)
    return SparseGraph(sp.csr_matrix(W), W.sum(axis=1), 1.0, 1.0)


def random_weights(n: int, rng: np.random.Generator, density: float = 0.3) -> np.ndarray:
    """Connected random symmetric weights: a ring plus random chords"""
    W = np.zeros((n, n))
    for i in range(n):
        W[i, (i + 1) % n] = W[(i + 1) % n, i] = rng.uniform(0.5, 1.5)
    chords = np.triu(rng.uniform(size=(n, n)) < density, k=2)
    weights = np.triu(rng.uniform(0.1, 1.0, size=(n, n)), k=2) * chords
    return W + weights + weights.T


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def line_cloud():
    return make_shape('line', 7)


@pytest.fixture
def line_graph(line_cloud):
    return build_graph(line_cloud, sigma=1.0, tau=1.01)


@pytest.fixture
def circle_cloud():
    return make_shape('circle', 16)


@pytest.fixture
def circle_graph(circle_cloud):
    # adjacent points are 2 sin(pi/16) ~ 0.39 apart, second neighbours ~ 0.77
    return build_graph(circle_cloud, sigma=0.5, tau=0.5)


@pytest.fixture
def cube_cloud():
    return make_shape('cube-faces', 8, {'per_edge': 6})


@pytest.fixture
def cube_graph(cube_cloud):
    return build_graph(cube_cloud, sigma=CUBE_SPACING, tau=1.01 * CUBE_SPACING)


@pytest.fixture
def cube_contour():
    return shape_contour('cube-faces', 8, {'per_edge': 6})


@pytest.fixture
def hinge_cloud():
    return make_shape('hinge', HINGE_POINTS)


@pytest.fixture
def hinge_contour():
    return shape_contour('hinge', HINGE_POINTS)


@pytest.fixture
def hinge_graph(hinge_cloud):
    return build_graph(hinge_cloud, sigma=HINGE_SPACING, tau=1.01 * HINGE_SPACING)


@pytest.fixture
def hinge_shift(hinge_graph):
    return shift_operator(hinge_graph, 'transition')


@pytest.fixture
def random_cloud(rng):
    return PointCloud(rng.uniform(size=(60, 3)))


@pytest.fixture
def random_graph(rng):
    return graph_from_dense(random_weights(30, rng))
