"""
Tests for point cloud containers, rigid transforms and normalization
"""

import numpy as np
import pytest

from pointcloud.core import (
    THREADS_ENV,
    PointCloud,
    RigidTransform,
    add_gaussian_noise,
    apply_transform,
    default_workers,
    recenter,
    scale_normalize,
    spectral_norm,
)
from pointcloud.errors import (
    BadParams,
    DegenerateCloud,
    DimensionMismatch,
    EmptyCloud,
    InvalidRotation,
    PointCloudError,
)


class TestPointCloud:

    def test_attrs_default_to_empty_block(self):
        cloud = PointCloud(np.eye(3))
        assert cloud.n_points == 3
        assert cloud.attrs.shape == (3, 0)
        assert cloud.matrix.shape == (3, 3)

    def test_arrays_are_read_only_copies(self):
        coords = np.zeros((2, 3))
        cloud = PointCloud(coords)
        coords[0, 0] = 5.0
        assert cloud.coords[0, 0] == 0.0
        with pytest.raises(ValueError):
            cloud.coords[0, 0] = 1.0

    def test_matrix_appends_attributes(self):
        cloud = PointCloud(np.ones((4, 3)), np.arange(4.0), ['intensity'])
        assert cloud.matrix.shape == (4, 4)
        np.testing.assert_array_equal(cloud.matrix[:, 3], np.arange(4.0))
        assert cloud.attr_names == ['intensity']

    def test_default_attribute_names(self):
        cloud = PointCloud(np.ones((2, 3)), np.ones((2, 2)))
        assert cloud.attr_names == ['attr0', 'attr1']

    def test_rejects_bad_shapes(self):
        with pytest.raises(DimensionMismatch):
            PointCloud(np.ones((3, 2)))
        with pytest.raises(DimensionMismatch):
            PointCloud(np.ones((3, 3)), np.ones((2, 1)))
        with pytest.raises(EmptyCloud):
            PointCloud(np.zeros((0, 3)))

    def test_rejects_non_finite(self):
        coords = np.ones((2, 3))
        coords[1, 2] = np.nan
        with pytest.raises(BadParams):
            PointCloud(coords)

    def test_select_keeps_order_and_attributes(self):
        cloud = PointCloud(np.arange(15.0).reshape(5, 3), np.arange(5.0), ['a'])
        picked = cloud.select([4, 0, 4])
        np.testing.assert_array_equal(picked.coords[:, 0], [12.0, 0.0, 12.0])
        np.testing.assert_array_equal(picked.attrs[:, 0], [4.0, 0.0, 4.0])

    def test_errors_share_a_base(self):
        assert issubclass(EmptyCloud, PointCloudError)
        assert issubclass(EmptyCloud, ValueError)


class TestRecenter:

    def test_two_points(self):
        cloud = PointCloud([[1.0, 1.0, 1.0], [3.0, 1.0, 1.0]])
        np.testing.assert_allclose(recenter(cloud).coords, [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])

    def test_centered_cloud_unchanged(self):
        cloud = PointCloud([[-1.0, 2.0, 0.0], [1.0, -2.0, 0.0]])
        np.testing.assert_array_equal(recenter(cloud).coords, cloud.coords)

    def test_random_cloud_mean_is_zero(self, rng):
        cloud = PointCloud(rng.normal(loc=3.0, size=(100, 3)), rng.normal(size=(100, 2)))
        out = recenter(cloud)
        np.testing.assert_allclose(out.coords.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_array_equal(out.attrs, cloud.attrs)


class TestSpectralNorm:

    def test_diagonal_rows(self):
        assert spectral_norm(np.array([[2.0, 0, 0], [0, 3.0, 0]])) == pytest.approx(3.0, rel=1e-10)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((4, 3))) == 0.0

    def test_matches_svd(self, rng):
        m = rng.normal(size=(50, 3))
        expected = np.linalg.svd(m, compute_uv=False)[0]
        assert spectral_norm(m) == pytest.approx(expected, rel=1e-8)

    def test_rejects_vectors(self):
        with pytest.raises(DimensionMismatch):
            spectral_norm(np.ones(3))


class TestScaleNormalize:

    def test_halves_norm_two_cloud(self):
        cloud = PointCloud(2.0 * np.eye(3))
        np.testing.assert_allclose(scale_normalize(cloud, 1.0).coords, np.eye(3), atol=1e-12)

    def test_cloud_at_target_unchanged(self, rng):
        coords = rng.normal(size=(20, 3))
        cloud = PointCloud(coords / np.linalg.svd(coords, compute_uv=False)[0])
        np.testing.assert_allclose(scale_normalize(cloud, 1.0).coords, cloud.coords, atol=1e-9)

    def test_reaches_target(self, rng):
        cloud = PointCloud(rng.normal(size=(40, 3)), rng.normal(size=(40, 1)))
        out = scale_normalize(cloud, 5.0)
        assert np.linalg.svd(out.coords, compute_uv=False)[0] == pytest.approx(5.0, abs=1e-6)
        np.testing.assert_array_equal(out.attrs, cloud.attrs)

    def test_errors(self):
        with pytest.raises(BadParams):
            scale_normalize(PointCloud(np.eye(3)), 0.0)
        with pytest.raises(DegenerateCloud):
            scale_normalize(PointCloud(np.zeros((3, 3))), 1.0)


class TestRigidTransform:

    def test_pure_shift(self):
        cloud = PointCloud(np.zeros((1, 3)))
        moved = apply_transform(cloud, RigidTransform(np.eye(3), [1.0, 0.0, 0.0]))
        np.testing.assert_array_equal(moved.coords, [[1.0, 0.0, 0.0]])

    def test_quarter_turn_about_z(self):
        cloud = PointCloud([[1.0, 0.0, 0.0]])
        moved = apply_transform(cloud, RigidTransform.from_axis_angle([0, 0, 1], 90.0))
        np.testing.assert_allclose(moved.coords, [[0.0, 1.0, 0.0]], atol=1e-12)

    def test_inverse_restores_cloud(self, rng):
        cloud = PointCloud(rng.normal(size=(30, 3)))
        t = RigidTransform.random(rng)
        back = apply_transform(apply_transform(cloud, t), t.inverse())
        np.testing.assert_allclose(back.coords, cloud.coords, atol=1e-9)

    def test_compose_applies_in_order(self, rng):
        points = rng.normal(size=(10, 3))
        first, second = RigidTransform.random(rng), RigidTransform.random(rng)
        np.testing.assert_allclose(first.compose(second).apply(points),
                                   second.apply(first.apply(points)), atol=1e-12)

    def test_random_rotation_is_proper(self, rng):
        for _ in range(10):
            t = RigidTransform.random(rng, max_degrees=20.0)
            assert t.orthonormality_error() < 1e-12
            assert np.linalg.det(t.rotation) == pytest.approx(1.0)

    def test_rejects_reflection(self):
        reflection = RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
        with pytest.raises(InvalidRotation):
            apply_transform(PointCloud(np.eye(3)), reflection)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(InvalidRotation):
            apply_transform(PointCloud(np.eye(3)), RigidTransform(2.0 * np.eye(3), np.zeros(3)))


class TestNoiseAndWorkers:

    def test_noise_is_seeded(self):
        cloud = PointCloud(np.zeros((2000, 3)))
        a = add_gaussian_noise(cloud, 0.02, seed=3)
        b = add_gaussian_noise(cloud, 0.02, seed=3)
        np.testing.assert_array_equal(a.coords, b.coords)
        assert a.coords.var() == pytest.approx(0.02, rel=0.1)

    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert default_workers() == 1
        monkeypatch.setenv(THREADS_ENV, '4')
        assert default_workers() == 4
        monkeypatch.setenv(THREADS_ENV, 'many')
        assert default_workers() == 1
