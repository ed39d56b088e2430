"""
Tests for graph construction, shift operators and spectral tools
"""

import math

import numpy as np
import pytest

from pointcloud.core import PointCloud
from pointcloud.errors import BadParams, BandwidthTooLarge, IsolatedNode, WrongShiftKind
from pointcloud.graph import (
    build_graph,
    dump_edges,
    estimate_sigma,
    graph_fourier,
    inverse_graph_fourier,
    lambda_max,
    require_kind,
    shift_operator,
    truncated_eigenbasis,
)

from conftest import graph_from_dense, random_weights


class TestBuildGraph:

    def test_single_edge_weight(self):
        cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        graph = build_graph(cloud, sigma=1.0, tau=2.0)
        assert graph.n_edges == 1
        assert graph.adjacency[0, 1] == pytest.approx(math.exp(-1.0))
        assert graph.adjacency[1, 0] == graph.adjacency[0, 1]

    def test_threshold_excludes_far_pair(self):
        cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [5.0, 0.0, 0.0]])
        graph = build_graph(cloud, sigma=1.0, tau=2.0)
        assert graph.n_edges == 1
        assert graph.isolated().tolist() == [2]

    def test_pair_exactly_at_tau_is_kept(self, line_cloud):
        graph = build_graph(line_cloud, sigma=1.0, tau=1.0)
        assert graph.n_edges == 6

    def test_symmetric_without_self_loops(self, random_cloud):
        graph = build_graph(random_cloud, sigma=0.2, tau=0.4)
        W = graph.adjacency.toarray()
        np.testing.assert_array_equal(W, W.T)
        assert np.all(np.diag(W) == 0)
        assert np.all((W == 0) | ((W > 0) & (W <= 1)))
        np.testing.assert_allclose(graph.degrees, W.sum(axis=1))

    def test_coincident_points_weigh_one(self):
        cloud = PointCloud([[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
        graph = build_graph(cloud, sigma=1.0, tau=1.0)
        assert graph.adjacency[0, 1] == 1.0

    def test_default_tau_follows_sigma(self, line_cloud):
        graph = build_graph(line_cloud, sigma=0.6, tau_factor=2.0)
        assert graph.tau == pytest.approx(1.2)
        assert graph.n_edges == 6

    def test_line_graph_is_a_path(self, line_graph):
        assert line_graph.n_edges == 6
        np.testing.assert_allclose(line_graph.degrees[[0, 6]], math.exp(-1.0))
        np.testing.assert_allclose(line_graph.degrees[1:6], 2 * math.exp(-1.0))

    def test_underflowing_weights_are_reported(self, caplog):
        cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        with caplog.at_level('WARNING', logger='pointcloud.graph'):
            graph = build_graph(cloud, sigma=0.01, tau=2.0)
        assert graph.n_edges == 0
        assert 'underflow' in caplog.text

    def test_rejects_nonpositive_scales(self, line_cloud):
        with pytest.raises(BadParams):
            build_graph(line_cloud, sigma=0.0, tau=1.0)
        with pytest.raises(BadParams):
            build_graph(line_cloud, sigma=1.0, tau=-1.0)

    def test_to_dict(self, line_graph):
        summary = line_graph.to_dict()
        assert summary['nodes'] == 7
        assert summary['edges'] == 6
        assert summary['isolated'] == 0


class TestEstimateSigma:

    def test_regular_line(self, line_cloud):
        # every point has a neighbour at distance 1
        assert estimate_sigma(line_cloud, k=1) == pytest.approx(1.0)

    def test_k_clamped_to_cloud_size(self, line_cloud):
        assert estimate_sigma(line_cloud, k=50) > 0

    def test_build_graph_estimates_when_omitted(self, hinge_cloud):
        graph = build_graph(hinge_cloud, k=4)
        assert graph.sigma > 0
        assert graph.tau == pytest.approx(2.0 * graph.sigma)


class TestShiftOperator:

    def test_transition_rows_sum_to_one(self, random_graph):
        op = shift_operator(random_graph, 'transition')
        np.testing.assert_allclose(np.asarray(op.matrix.sum(axis=1)).ravel(), 1.0)

    def test_laplacian_rows_sum_to_zero(self, random_graph):
        op = shift_operator(random_graph, 'laplacian')
        np.testing.assert_allclose(np.asarray(op.matrix.sum(axis=1)).ravel(), 0.0, atol=1e-12)

    def test_normalized_adjacency_is_symmetric(self, random_graph):
        op = shift_operator(random_graph, 'normalized')
        assert op.kind == 'normalized-adjacency'
        A = op.matrix.toarray()
        np.testing.assert_allclose(A, A.T, atol=1e-14)

    def test_isolated_node_self_loop(self):
        cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [9.0, 0.0, 0.0]])
        graph = build_graph(cloud, sigma=1.0, tau=2.0)
        op = shift_operator(graph, 'transition')
        assert op.matrix[2, 2] == 1.0
        with pytest.raises(IsolatedNode):
            shift_operator(graph, 'transition', isolated_policy='strict')

    def test_unknown_kind(self, random_graph):
        with pytest.raises(BadParams):
            shift_operator(random_graph, 'random-walk')

    def test_require_kind(self, random_graph):
        op = shift_operator(random_graph, 'adjacency')
        with pytest.raises(WrongShiftKind):
            require_kind(op, 'transition', 'haar filtering')


class TestLambdaMax:

    def test_complete_graph_on_three_nodes(self):
        W = np.ones((3, 3)) - np.eye(3)
        op = shift_operator(graph_from_dense(W), 'adjacency')
        assert lambda_max(op) == pytest.approx(2.0, rel=1e-8)

    def test_transition_is_one(self, random_graph):
        assert lambda_max(shift_operator(random_graph, 'transition')) == 1.0

    def test_bipartite_graph(self):
        # path on two nodes has eigenvalues +1 and -1
        W = np.array([[0.0, 1.0], [1.0, 0.0]])
        op = shift_operator(graph_from_dense(W), 'adjacency')
        assert lambda_max(op) == pytest.approx(1.0, rel=1e-8)

    def test_matches_dense_spectrum(self, rng):
        W = random_weights(25, rng)
        for kind in ('adjacency', 'laplacian', 'normalized-adjacency'):
            op = shift_operator(graph_from_dense(W), kind)
            expected = np.max(np.abs(np.linalg.eigvalsh(op.matrix.toarray())))
            assert op.lambda_max == pytest.approx(expected, rel=1e-6)

    def test_empty_graph(self):
        op = shift_operator(graph_from_dense(np.zeros((3, 3))), 'adjacency')
        assert lambda_max(op) == 0.0


class TestEigenbasis:

    def test_orthonormal_descending(self, random_graph):
        basis = truncated_eigenbasis(shift_operator(random_graph, 'adjacency'), 5)
        np.testing.assert_allclose(basis.vectors.T @ basis.vectors, np.eye(5), atol=1e-10)
        assert np.all(np.diff(basis.eigenvalues) <= 0)

    def test_smallest_laplacian_mode_is_constant(self, random_graph):
        basis = truncated_eigenbasis(shift_operator(random_graph, 'laplacian'), 1, largest=False)
        assert basis.eigenvalues[0] == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose(basis.vectors[:, 0], 1.0 / np.sqrt(30), atol=1e-10)

    def test_transition_vectors_are_eigenvectors(self, random_graph):
        op = shift_operator(random_graph, 'transition')
        basis = truncated_eigenbasis(op, 4)
        P = op.matrix.toarray()
        np.testing.assert_allclose(P @ basis.transition_vectors,
                                   basis.transition_vectors * basis.eigenvalues, atol=1e-10)
        assert basis.eigenvalues[0] == pytest.approx(1.0)

    def test_full_basis_round_trip(self, random_graph, rng):
        basis = truncated_eigenbasis(shift_operator(random_graph, 'adjacency'), 30)
        signal = rng.normal(size=(30, 3))
        np.testing.assert_allclose(inverse_graph_fourier(basis, graph_fourier(basis, signal)),
                                   signal, atol=1e-10)

    def test_sparse_path_matches_dense(self, hinge_shift):
        basis = truncated_eigenbasis(hinge_shift, 5)
        dense = np.sort(np.linalg.eigvalsh(hinge_shift.symmetric_form().toarray()))[::-1][:5]
        np.testing.assert_allclose(basis.eigenvalues, dense, atol=1e-8)

    def test_bandwidth_limits(self, random_graph):
        op = shift_operator(random_graph, 'adjacency')
        with pytest.raises(BandwidthTooLarge):
            truncated_eigenbasis(op, 31)
        with pytest.raises(BadParams):
            truncated_eigenbasis(op, 0)


class TestDumpEdges:

    def test_upper_triangle_rows(self, line_graph, tmp_path):
        path = tmp_path / 'edges.csv'
        assert dump_edges(line_graph, path) == 6
        lines = path.read_text().splitlines()
        assert lines[0] == 'i,j,w'
        assert lines[1].startswith('0,1,')
        assert float(lines[1].split(',')[2]) == pytest.approx(math.exp(-1.0))
