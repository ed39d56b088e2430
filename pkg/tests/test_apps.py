"""
Tests for sphere fitting, low-pass denoising and ICP registration
"""

import math

import numpy as np
import pytest

from pointcloud.apps import (
    REGISTRATION_STRATEGIES,
    SPHERE_CENTER,
    SPHERE_RADIUS,
    RegistrationReport,
    SphereFit,
    denoise_lowpass,
    fit_sphere,
    icp_register,
    kabsch,
    registration_experiment,
    registration_metrics,
    resample_for_registration,
    sphere_experiment,
)
from pointcloud.core import PointCloud, RigidTransform, add_gaussian_noise, apply_transform
from pointcloud.errors import BadParams, DegenerateConfiguration
from pointcloud.graph import build_graph, shift_operator
from pointcloud.shapes import make_shape

from conftest import SPHERE_PARAMS


@pytest.fixture
def ellipsoid(rng):
    # anisotropic so that the registration has a unique optimum
    return PointCloud(rng.normal(size=(300, 3)) * [1.0, 0.5, 0.2])


class TestFitSphere:

    def test_noiseless_sphere(self):
        cloud = make_shape('sphere', 1000, SPHERE_PARAMS)
        fit = fit_sphere(cloud)
        assert fit.radius == pytest.approx(0.3182, abs=1e-6)
        np.testing.assert_allclose(fit.center, SPHERE_PARAMS['center'], atol=1e-6)
        assert fit.rms_residual < 1e-9

    def test_relative_errors(self):
        fit = SphereFit(np.array([1.1, 0.0, -2.0]), 2.2, 0.0)
        errors = fit.relative_errors((1.0, 0.0, -2.0), 2.0)
        assert errors['radius'] == pytest.approx(0.1)
        assert errors['center_x'] == pytest.approx(0.1)
        assert errors['center_y'] == 0.0
        assert errors['center_z'] == 0.0

    def test_coplanar_points(self, circle_cloud):
        with pytest.raises(DegenerateConfiguration):
            fit_sphere(circle_cloud)

    def test_too_few_points(self):
        with pytest.raises(DegenerateConfiguration):
            fit_sphere(PointCloud(np.eye(3)))

    def test_to_dict(self):
        fit = fit_sphere(make_shape('sphere', 50, {'radius': 2.0}))
        assert fit.to_dict()['radius'] == pytest.approx(2.0)


class TestDenoise:

    def test_line_ends_pulled_inwards(self, line_graph, line_cloud):
        out = denoise_lowpass(line_cloud, shift_operator(line_graph))
        np.testing.assert_allclose(out.coords[1:6], line_cloud.coords[1:6], atol=1e-12)
        np.testing.assert_allclose(out.coords[[0, 6], 0], [0.5, 5.5])

    def test_reduces_sphere_noise(self):
        clean = make_shape('sphere', 1200, SPHERE_PARAMS)
        noisy = add_gaussian_noise(clean, 0.001, seed=1)
        graph = build_graph(noisy, sigma=0.06, tau=0.12)
        smoothed = denoise_lowpass(noisy, shift_operator(graph), passes=2)
        center = np.asarray(SPHERE_PARAMS['center'])
        before = np.std(np.linalg.norm(noisy.coords - center, axis=1))
        after = np.std(np.linalg.norm(smoothed.coords - center, axis=1))
        assert after < before

    def test_passes_must_be_positive(self, line_graph, line_cloud):
        with pytest.raises(BadParams):
            denoise_lowpass(line_cloud, shift_operator(line_graph), passes=0)


class TestKabsch:

    def test_recovers_transform(self, ellipsoid, rng):
        truth = RigidTransform.random(rng)
        recovered = kabsch(ellipsoid.coords, truth.apply(ellipsoid.coords))
        np.testing.assert_allclose(recovered.rotation, truth.rotation, atol=1e-10)
        np.testing.assert_allclose(recovered.shift, truth.shift, atol=1e-10)

    def test_returns_proper_rotation(self, rng):
        P = rng.normal(size=(20, 3))
        Q = P * [1.0, 1.0, -1.0]
        assert np.linalg.det(kabsch(P, Q).rotation) == pytest.approx(1.0)


class TestIcp:

    def test_recovers_small_motion(self, ellipsoid):
        applied = RigidTransform.from_axis_angle([1.0, 2.0, 3.0], 1.0, (0.01, -0.01, 0.005))
        moved = apply_transform(ellipsoid, applied)
        report = icp_register(moved, ellipsoid, max_iter=100, tol=1e-12, truth=applied.inverse())
        assert report.converged
        assert report.rmse < 1e-6
        assert report.shift_error < 1e-6
        assert report.rotation_error < 1e-6
        assert report.history[0] > report.history[-1]

    def test_identity_when_aligned(self, ellipsoid):
        report = icp_register(ellipsoid, ellipsoid, max_iter=5)
        assert report.converged
        assert report.iterations == 2
        assert report.shift_error is None

    def test_not_converged_flag(self, ellipsoid):
        applied = RigidTransform.from_axis_angle([0.0, 0.0, 1.0], 10.0, (0.2, 0.0, 0.0))
        report = icp_register(apply_transform(ellipsoid, applied), ellipsoid, max_iter=1)
        assert not report.converged
        assert report.iterations == 1

    @pytest.mark.parametrize('degrees', [1.0, 10.0, 30.0])
    def test_correspondence_rmse_never_rises(self, ellipsoid, degrees, caplog):
        applied = RigidTransform.from_axis_angle([1.0, -1.0, 2.0], degrees, (0.1, 0.05, -0.05))
        with caplog.at_level('WARNING', logger='pointcloud.apps'):
            report = icp_register(apply_transform(ellipsoid, applied), ellipsoid, max_iter=60)
        assert np.all(np.diff(report.history) <= 1e-12)
        assert report.monotone
        assert report.to_dict()['monotone'] is True
        assert 'rose' not in caplog.text

    def test_rising_history_is_flagged(self):
        report = RegistrationReport(1.0, None, None, 3, RigidTransform.identity(), history=[0.5, 0.4, 0.45])
        assert not report.monotone

    def test_metrics_sum_over_points(self):
        reference = PointCloud(np.zeros((1, 3)))
        registered = PointCloud([[3.0, 0.0, 0.0], [0.0, 4.0, 0.0]])
        report = registration_metrics(RigidTransform.identity(), None, registered, reference)
        assert report.rmse == pytest.approx(5.0)
        assert report.rotation_error is None

    def test_needs_three_points(self, ellipsoid):
        with pytest.raises(BadParams):
            icp_register(PointCloud(np.eye(3)[:2]), ellipsoid)


class TestRegistrationResampling:

    def test_full_returns_cloud(self, ellipsoid):
        assert resample_for_registration(ellipsoid, 'full', 0.1) is ellipsoid

    @pytest.mark.parametrize('strategy', [s for s in REGISTRATION_STRATEGIES if s != 'full'])
    def test_reduced_size(self, strategy):
        cloud = make_shape('desk', 1500, {'seed': 2})
        reduced = resample_for_registration(cloud, strategy, 0.05, seed=0)
        assert 0 < reduced.n_points <= math.ceil(0.05 * cloud.n_points)

    def test_unknown_strategy(self, ellipsoid):
        with pytest.raises(BadParams):
            resample_for_registration(ellipsoid, 'octree', 0.1)


class TestExperiments:

    def test_sphere_experiment_single_seed(self):
        result = sphere_experiment(0, n_points=600, bandwidth=30)
        assert set(result.uniform_errors) == {'radius', 'center_x', 'center_y', 'center_z'}
        assert result.lowpass.radius > 0
        assert result.to_dict()['seed'] == 0
        assert SPHERE_RADIUS == 0.3182
        assert SPHERE_CENTER == (0.0833, 0.1903, 1.1725)

    def test_registration_experiment_single_seed(self):
        report = registration_experiment(0, 'highpass', n_points=1500, ratio=0.1)
        assert report.iterations >= 1
        assert report.shift_error is not None
        assert np.isfinite(report.rmse)

    def test_registration_experiment_is_seeded(self):
        a = registration_experiment(4, 'uniform', n_points=1000, ratio=0.1)
        b = registration_experiment(4, 'uniform', n_points=1000, ratio=0.1)
        assert a.rmse == b.rmse
        assert a.shift_error == b.shift_error
