"""
Tests for local variation, pairwise variation, difference of normals and contour metrics
"""

import numpy as np
import pytest

from pointcloud.core import PointCloud, RigidTransform, apply_transform
from pointcloud.errors import BadParams, DimensionMismatch, InsufficientNeighbors
from pointcloud.features import (
    FeatureVector,
    contour_hit_rate,
    contour_recall,
    don_scores,
    feature_matrix,
    filter_response,
    local_variation,
    pairwise_variation,
    top_fraction_mask,
)
from pointcloud.filters import GraphFilter, haar_highpass, haar_lowpass
from pointcloud.graph import build_graph, shift_operator
from pointcloud.shapes import make_shape, shape_contour

from conftest import CUBE_SPACING, HINGE_POINTS, HINGE_SPACING

ZERO = 1e-12
TEXTURE = {'texture': True}

# graph scales that join each fixture point to its lattice neighbours only
FIXTURE_SCALES = {
    'line_cloud': (1.0, 1.01),
    'circle_cloud': (0.5, 0.5),
    'cube_cloud': (CUBE_SPACING, 1.01 * CUBE_SPACING),
    'hinge_cloud': (HINGE_SPACING, 1.01 * HINGE_SPACING),
}


class TestFeatureVector:

    def test_matrix_views(self):
        fv = FeatureVector(np.array([3.0, 4.0]), 'local-variation')
        assert fv.as_matrix().shape == (2, 1)
        np.testing.assert_array_equal(fv.row_norms(), [3.0, 4.0])
        assert feature_matrix(np.ones(5)).shape == (5, 1)

    def test_rejects_unknown_kind(self):
        with pytest.raises(BadParams):
            FeatureVector(np.ones(3), 'curvature')

    def test_rejects_3d_arrays(self):
        with pytest.raises(DimensionMismatch):
            feature_matrix(np.ones((2, 2, 2)))


class TestLocalVariation:

    def test_line_endpoints_only(self, line_graph, line_cloud):
        lv = local_variation(shift_operator(line_graph), line_cloud).values
        np.testing.assert_allclose(lv[1:6], 0.0, atol=ZERO)
        np.testing.assert_allclose(lv[[0, 6]], 1.0)

    def test_circle_is_uniform(self, circle_graph, circle_cloud):
        lv = local_variation(shift_operator(circle_graph), circle_cloud).values
        assert lv.min() > 0
        np.testing.assert_allclose(lv, lv[0], rtol=1e-9)

    def test_cube_face_interiors_vanish(self, cube_graph, cube_cloud, cube_contour):
        lv = local_variation(shift_operator(cube_graph), cube_cloud).values
        np.testing.assert_allclose(lv[~cube_contour], 0.0, atol=ZERO)
        assert np.all(lv[cube_contour] > ZERO)
        # corners (3 neighbours) dominate edges (4 neighbours)
        assert cube_contour[np.argmax(lv)]
        assert lv.max() == pytest.approx(CUBE_SPACING ** 2 / 3.0)

    def test_hinge_support_on_contour(self, hinge_shift, hinge_cloud, hinge_contour):
        lv = local_variation(hinge_shift, hinge_cloud).values
        nonzero = lv > ZERO
        assert np.all(hinge_contour[nonzero])
        assert np.all(top_fraction_mask(lv, 0.1) <= hinge_contour)

    def test_texture_boundary(self):
        cloud = make_shape('hinge', HINGE_POINTS, TEXTURE)
        graph = build_graph(cloud, sigma=HINGE_SPACING, tau=1.01 * HINGE_SPACING)
        lv = local_variation(shift_operator(graph), cloud, include_attrs=True).values
        interior = ~shape_contour('hinge', HINGE_POINTS, TEXTURE)
        rows = np.rint(cloud.coords[:, 1] / HINGE_SPACING).astype(int)
        boundary = np.isin(rows, [9, 10])
        assert np.all(lv[interior & boundary] > ZERO)
        np.testing.assert_allclose(lv[interior & ~boundary], 0.0, atol=ZERO)

    def test_coordinates_only_ignores_texture(self):
        cloud = make_shape('hinge', HINGE_POINTS, TEXTURE)
        graph = build_graph(cloud, sigma=HINGE_SPACING, tau=1.01 * HINGE_SPACING)
        lv = local_variation(shift_operator(graph), cloud).values
        np.testing.assert_allclose(lv[~shape_contour('hinge', HINGE_POINTS, TEXTURE)], 0.0, atol=ZERO)

    def test_rejects_non_highpass_filter(self, line_graph, line_cloud):
        op = shift_operator(line_graph)
        with pytest.raises(BadParams):
            local_variation(op, line_cloud, filt=haar_lowpass(op))

    def test_custom_highpass_filter(self, line_graph, line_cloud):
        op = shift_operator(line_graph)
        doubled = GraphFilter([2.0, -2.0], op)
        lv = local_variation(op, line_cloud, filt=doubled).values
        np.testing.assert_allclose(lv[[0, 6]], 4.0)

    def test_size_mismatch(self, line_graph, circle_cloud):
        with pytest.raises(DimensionMismatch):
            local_variation(shift_operator(line_graph), circle_cloud)


class TestRigidInvariance:

    @pytest.mark.parametrize('fixture', sorted(FIXTURE_SCALES))
    @pytest.mark.parametrize('seed', range(20))
    def test_local_variation_ignores_rigid_motion(self, seed, fixture, request):
        cloud = request.getfixturevalue(fixture)
        sigma, tau = FIXTURE_SCALES[fixture]
        original = local_variation(shift_operator(build_graph(cloud, sigma=sigma, tau=tau)), cloud).values

        moved = apply_transform(cloud, RigidTransform.random(np.random.default_rng(seed), max_shift=2.0))
        graph = build_graph(moved, sigma=sigma, tau=tau)
        moved_lv = local_variation(shift_operator(graph, 'transition'), moved).values
        np.testing.assert_allclose(moved_lv, original, rtol=0, atol=1e-9)

    @pytest.mark.parametrize('scale', [0.01, 3.0, 250.0])
    def test_local_variation_scales_quadratically(self, scale, hinge_cloud, hinge_shift):
        scaled = hinge_cloud.with_coords(scale * hinge_cloud.coords)
        graph = build_graph(scaled, sigma=scale * HINGE_SPACING, tau=1.01 * scale * HINGE_SPACING)
        scaled_lv = local_variation(shift_operator(graph, 'transition'), scaled).values
        np.testing.assert_allclose(scaled_lv, scale ** 2 * local_variation(hinge_shift, hinge_cloud).values,
                                   rtol=1e-8, atol=ZERO * scale ** 2)


class TestPairwiseVariation:

    def test_two_points(self):
        cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        graph = build_graph(cloud, sigma=1.0, tau=2.0)
        np.testing.assert_allclose(pairwise_variation(graph, cloud).values, [np.exp(-1.0)] * 2)

    def test_cube_non_corners_equal(self, cube_graph, cube_cloud):
        pv = pairwise_variation(cube_graph, cube_cloud).values
        degree = np.rint(cube_graph.degrees / np.exp(-1.0)).astype(int)
        expected = np.exp(-1.0) * CUBE_SPACING ** 2
        np.testing.assert_allclose(pv[degree == 4], 4 * expected, rtol=1e-9)
        np.testing.assert_allclose(pv[degree == 3], 3 * expected, rtol=1e-9)
        assert (degree == 3).sum() == 8

    def test_sums_to_twice_quadratic_form(self, random_cloud):
        graph = build_graph(random_cloud, sigma=0.2, tau=0.4)
        pv = pairwise_variation(graph, random_cloud).values
        L = np.diag(graph.degrees) - graph.adjacency.toarray()
        X = random_cloud.coords
        assert pv.sum() == pytest.approx(2.0 * np.trace(X.T @ L @ X))

    def test_isolated_point_scores_zero(self):
        cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [9.0, 0.0, 0.0]])
        graph = build_graph(cloud, sigma=1.0, tau=2.0)
        assert pairwise_variation(graph, cloud).values[2] == 0.0


class TestDifferenceOfNormals:

    def test_flat_plate_scores_zero(self):
        plate = make_shape('hinge', HINGE_POINTS).coords
        flat = plate[plate[:, 2] == 0.0]
        scores = don_scores(PointCloud(flat), 1.5 * HINGE_SPACING, 3.0 * HINGE_SPACING).values
        np.testing.assert_allclose(scores, 0.0, atol=1e-6)

    def test_hinge_peaks_near_fold(self, hinge_cloud):
        h = HINGE_SPACING
        scores = don_scores(hinge_cloud, 1.5 * h, 3.0 * h).values
        assert np.all((scores >= 0) & (scores <= 1.0 + 1e-12))
        distance_to_fold = np.maximum(hinge_cloud.coords[:, 0], hinge_cloud.coords[:, 2])
        far = distance_to_fold > 3.5 * h
        np.testing.assert_allclose(scores[far], 0.0, atol=1e-6)
        assert scores.max() > 1e-3
        assert distance_to_fold[np.argmax(scores)] <= 3.0 * h + 1e-12

    def test_radius_order(self, hinge_cloud):
        with pytest.raises(BadParams):
            don_scores(hinge_cloud, 0.2, 0.1)

    def test_sparse_neighbourhoods(self, line_cloud):
        with pytest.raises(InsufficientNeighbors):
            don_scores(line_cloud, 0.5, 2.0)

    def test_neighbour_count_excludes_the_point(self):
        triangle = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        with pytest.raises(InsufficientNeighbors):
            don_scores(triangle, 1.5, 3.0)
        square = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
        np.testing.assert_allclose(don_scores(square, 1.5, 3.0).values, 0.0, atol=1e-12)


class TestContourMetrics:

    def test_top_fraction_rounds_up(self):
        mask = top_fraction_mask(np.array([0.1, 0.9, 0.5, 0.3, 0.2, 0.0, 0.8]), 0.1)
        assert np.flatnonzero(mask).tolist() == [1]
        assert top_fraction_mask(np.arange(7.0), 0.3).sum() == 3

    def test_top_fraction_of_raw_rows(self):
        values = np.array([[3.0, 4.0], [0.0, 1.0], [1.0, 1.0]])
        assert np.flatnonzero(top_fraction_mask(values, 0.3)).tolist() == [0]

    def test_top_fraction_bounds(self):
        with pytest.raises(BadParams):
            top_fraction_mask(np.ones(4), 0.0)

    def test_recall_and_hit_rate(self):
        contour = np.array([True, False, True, False])
        assert contour_recall([0, 0, 1], contour) == pytest.approx(0.5)
        assert contour_hit_rate([0, 0, 1], contour) == pytest.approx(2.0 / 3.0)
        assert contour_recall([1], np.zeros(4, dtype=bool)) == 0.0
        assert contour_hit_rate([], contour) == 0.0

    def test_filter_response_shape(self, line_graph, line_cloud):
        fv = filter_response(haar_highpass(shift_operator(line_graph)), line_cloud)
        assert fv.kind == 'raw'
        assert fv.values.shape == (7, 3)
