"""
Resampling
Optimal resampling distributions, i.i.d. sampling with rescaling, and reconstruction error
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .core import PointCloud, RigidTransform, spectral_norm
from .errors import (
    AllZeroFeatures,
    BadParams,
    DimensionMismatch,
    UnsupportedFeature,
    ZeroSupport,
)
from .features import feature_matrix, local_variation, pairwise_variation
from .filters import IdealLowPass
from .graph import ShiftOperator, SparseGraph

logger = logging.getLogger(__name__)

# Trials per vectorized Monte-Carlo block are capped so that
# block_trials * max(N, M) stays below this many entries
_MC_BLOCK_ENTRIES = 2_000_000


@dataclass(frozen=True, eq=False)
class ResamplingDistribution:
    """Per-point sampling probabilities"""
    probs: np.ndarray
    floor_mix: float = 0.0
    name: str = 'custom'

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float, copy=True).reshape(-1)
        if len(probs) == 0:
            raise BadParams("distribution over zero points")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise BadParams("probabilities must be finite and nonnegative")
        total = probs.sum()
        # an all-zero vector is representable so that sample() can report it
        if total > 0 and abs(total - 1.0) > 1e-9:
            raise BadParams(f"probabilities sum to {total}, expected 1")
        if not 0.0 <= self.floor_mix <= 1.0:
            raise BadParams(f"floor mix must lie in [0, 1], got {self.floor_mix}")
        probs.setflags(write=False)
        object.__setattr__(self, 'probs', probs)

    @property
    def n_points(self) -> int:
        return len(self.probs)

    def support(self) -> np.ndarray:
        return self.probs > 0

    def with_floor(self, beta: float) -> 'ResamplingDistribution':
        """Mix with the uniform distribution: (1 - beta) pi + beta / N"""
        if not 0.0 <= beta <= 1.0:
            raise BadParams(f"floor mix must lie in [0, 1], got {beta}")
        if beta == 0.0:
            return self
        probs = (1.0 - beta) * self.probs + beta / self.n_points
        return ResamplingDistribution(probs / probs.sum(), beta, self.name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'points': self.n_points,
            'floor_mix': self.floor_mix,
            'support': int(self.support().sum()),
            'max_prob': float(self.probs.max()),
            'min_prob': float(self.probs.min())
        }


@dataclass(frozen=True, eq=False)
class ResampleResult:
    """Sampled slots: node indices with repetition and their rescale weights"""
    indices: np.ndarray
    weights: np.ndarray
    seed: Optional[int]
    n_points: int

    @property
    def M(self) -> int:
        return len(self.indices)

    def unique_indices(self) -> np.ndarray:
        return np.unique(self.indices)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'samples': self.M,
            'unique': int(len(self.unique_indices())),
            'points': self.n_points,
            'seed': self.seed
        }


def row_norms(features) -> np.ndarray:
    return np.linalg.norm(feature_matrix(features), axis=1)


def _from_weights(weights: np.ndarray, name: str, beta: float = 0.0) -> ResamplingDistribution:
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        raise AllZeroFeatures(f"{name}: every feature row is zero")
    dist = ResamplingDistribution(weights / total, 0.0, name).with_floor(beta)
    logger.info(f"Computed {name} distribution over {len(weights)} points "
                f"(support {int(dist.support().sum())}, floor {beta})")
    return dist


def _default_c(cloud: PointCloud, c: Optional[float]) -> float:
    if c is None:
        c = spectral_norm(cloud.coords)
    if c <= 0:
        raise BadParams(f"c must be positive, got {c}")
    return float(c)


def dist_uniform(n: int) -> ResamplingDistribution:
    if n < 1:
        raise BadParams(f"uniform distribution needs at least one point, got {n}")
    return ResamplingDistribution(np.full(n, 1.0 / n), 0.0, 'uniform')


def dist_invariant(features, beta: float = 0.0) -> ResamplingDistribution:
    """pi_i proportional to ||f_i||; optimal for rotation-invariant features"""
    return _from_weights(row_norms(features), 'invariant', beta)


def dist_variant(F_row_norms: np.ndarray, FXo_row_norms: Optional[np.ndarray], c: float,
                 beta: float = 0.0) -> ResamplingDistribution:
    """
    pi_i proportional to sqrt(c^2 ||F_i||^2 + ||(F X_o)_i||^2)

    Optimal for linear features F X when coordinates may be rotated.

    Args:
        F_row_norms: ||F_i|| per row
        FXo_row_norms: ||(F X_o)_i|| per row, or None when there are no attributes
        c: Spectral norm of the coordinate block
        beta: Uniform floor mix
    """
    if c <= 0:
        raise BadParams(f"c must be positive, got {c}")
    F = np.asarray(F_row_norms, dtype=float)
    attr = np.zeros_like(F) if FXo_row_norms is None else np.asarray(FXo_row_norms, dtype=float)
    if attr.shape != F.shape:
        raise DimensionMismatch(f"row-norm vectors differ in length: {F.shape} vs {attr.shape}")
    return _from_weights(np.sqrt(c * c * F ** 2 + attr ** 2), 'variant', beta)


def dist_allpass(cloud: PointCloud, c: Optional[float] = None, beta: float = 0.0) -> ResamplingDistribution:
    """F = I: uniform without attributes, otherwise weighted by attribute energy"""
    c = _default_c(cloud, c)
    ones = np.ones(cloud.n_points)
    attr = np.linalg.norm(cloud.attrs, axis=1) if cloud.n_attrs else None
    dist = dist_variant(ones, attr, c, beta)
    return ResamplingDistribution(dist.probs, dist.floor_mix, 'allpass')


def dist_highpass(shift: ShiftOperator, cloud: PointCloud, exponent: int = 2,
                  include_attrs: bool = False, beta: float = 0.0) -> ResamplingDistribution:
    """
    Local-variation distribution

    exponent=2 weights points by the squared high-pass response norm;
    exponent=1 by its plain norm.
    """
    if exponent not in (1, 2):
        raise BadParams(f"exponent must be 1 or 2, got {exponent}")
    variation = local_variation(shift, cloud, include_attrs).values
    weights = variation if exponent == 2 else np.sqrt(variation)
    return _from_weights(weights, 'highpass', beta)


def dist_pairwise(graph: SparseGraph, cloud: PointCloud, beta: float = 0.0) -> ResamplingDistribution:
    """Baseline weighting by pairwise-difference variation"""
    return _from_weights(pairwise_variation(graph, cloud).values, 'pairwise', beta)


def ideal_lowpass_row_norms(lowpass: IdealLowPass, cloud: PointCloud):
    """(||F_i||, ||(F X_o)_i||) for F the ideal low-pass projection"""
    V = lowpass.vectors
    if lowpass.oblique:
        U = lowpass.basis.vectors
        gram = U.T @ (lowpass.basis.degrees[:, None] * U)
        F_norms = np.sqrt(np.maximum(np.einsum('ij,jk,ik->i', V, gram, V), 0.0))
    else:
        F_norms = np.linalg.norm(V, axis=1)
    attr = np.linalg.norm(lowpass.project(cloud.attrs), axis=1) if cloud.n_attrs else None
    return F_norms, attr


def dist_ideal_lowpass(lowpass: IdealLowPass, cloud: PointCloud, c: Optional[float] = None,
                       beta: float = 0.0) -> ResamplingDistribution:
    """Leverage scores of the low-pass basis, plus the attribute term"""
    if lowpass.shift.n != cloud.n_points:
        raise DimensionMismatch(f"basis has {lowpass.shift.n} nodes, cloud has {cloud.n_points} points")
    F_norms, attr = ideal_lowpass_row_norms(lowpass, cloud)
    dist = dist_variant(F_norms, attr, _default_c(cloud, c), beta)
    return ResamplingDistribution(dist.probs, dist.floor_mix, 'lowpass-ideal')


def haar_lowpass_matrix(shift: ShiftOperator) -> sp.csr_matrix:
    """Sparse I + A / |lambda_max|"""
    lam = abs(shift.lambda_max)
    A = shift.matrix / lam if lam > 0 else shift.matrix
    return sp.csr_matrix(sp.identity(shift.n, format='csr') + A)


def dist_haar_lowpass(shift: ShiftOperator, cloud: PointCloud, c: Optional[float] = None,
                      beta: float = 0.0) -> ResamplingDistribution:
    """Row norms of I + A_norm from the sparse rows, plus the attribute term"""
    if shift.n != cloud.n_points:
        raise DimensionMismatch(f"shift has {shift.n} nodes, cloud has {cloud.n_points} points")
    H = haar_lowpass_matrix(shift)
    F_norms = np.sqrt(np.asarray(H.multiply(H).sum(axis=1)).ravel())
    attr = np.linalg.norm(H @ cloud.attrs, axis=1) if cloud.n_attrs else None
    dist = dist_variant(F_norms, attr, _default_c(cloud, c), beta)
    return ResamplingDistribution(dist.probs, dist.floor_mix, 'lowpass-haar')


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side='right'), len(probs) - 1)


def sample(dist: ResamplingDistribution, M: int, seed: Optional[int] = None) -> ResampleResult:
    """
    M i.i.d. draws with replacement by inverse CDF

    Args:
        dist: Sampling distribution
        M: Number of draws
        seed: Seed for numpy's default generator

    Returns:
        ResampleResult with weights 1 / sqrt(M pi_i)
    """
    if M < 1:
        raise BadParams(f"sample count must be at least 1, got {M}")
    if not np.any(dist.probs > 0):
        raise ZeroSupport("cannot sample from a distribution with no mass")
    rng = np.random.default_rng(seed)
    indices = _inverse_cdf(dist.probs, rng.random(M))
    weights = 1.0 / np.sqrt(M * dist.probs[indices])
    logger.debug(f"Drew {M} samples ({len(np.unique(indices))} unique) with seed {seed}")
    return ResampleResult(indices, weights, seed, dist.n_points)


def reconstruction_error(features, result: ResampleResult) -> float:
    """Squared Frobenius norm of the zero-padded rescaled reconstruction residual"""
    F = feature_matrix(features)
    if F.shape[0] != result.n_points:
        raise DimensionMismatch(f"features have {F.shape[0]} rows, result covers {result.n_points} points")
    # squared weights accumulate over repeated draws of the same point
    scale = np.bincount(result.indices, weights=result.weights ** 2, minlength=result.n_points)
    residual = (scale - 1.0)[:, None] * F
    return float(np.sum(residual ** 2))


def _weighted_excess(probs: np.ndarray, sq_norms: np.ndarray, name: str, strict: bool = False) -> float:
    unsupported = (probs == 0) & (sq_norms > 0)
    if unsupported.any():
        if strict:
            raise UnsupportedFeature(f"{name}: {int(unsupported.sum())} nonzero feature rows have "
                                     f"zero probability")
        logger.warning(f"{name}: {int(unsupported.sum())} nonzero feature rows have zero "
                       f"probability; error is infinite")
        return float('inf')
    with np.errstate(divide='ignore'):
        q = np.where(probs > 0, 1.0 / probs - 1.0, 0.0)
    return float(np.sum(q * sq_norms))


def mse_closed_form(features, dist: ResamplingDistribution, samples: int = 1,
                    strict: bool = False) -> float:
    """
    Expected reconstruction error sum_i (1/pi_i - 1) ||f_i||^2 / samples

    samples=1 gives the single-draw expression; the M-draw estimator's error
    is that value divided by M. Unsupported nonzero rows give +inf, or
    raise UnsupportedFeature when strict.
    """
    if samples < 1:
        raise BadParams(f"samples must be at least 1, got {samples}")
    sq = row_norms(features) ** 2
    if len(sq) != dist.n_points:
        raise DimensionMismatch(f"features have {len(sq)} rows, distribution has {dist.n_points}")
    return _weighted_excess(dist.probs, sq, "mse_closed_form", strict) / samples


def mse_closed_form_variant(F_row_norms: np.ndarray, FXo_matrix: Optional[np.ndarray],
                            dist: ResamplingDistribution, c: float, samples: int = 1,
                            strict: bool = False) -> float:
    """Worst-case expected error over rotations: c^2 Tr(F Q F^T) + Tr(F X_o Q (F X_o)^T)"""
    if samples < 1:
        raise BadParams(f"samples must be at least 1, got {samples}")
    F_sq = np.asarray(F_row_norms, dtype=float) ** 2
    if len(F_sq) != dist.n_points:
        raise DimensionMismatch(f"F has {len(F_sq)} rows, distribution has {dist.n_points}")
    total = c * c * _weighted_excess(dist.probs, F_sq, "mse_closed_form_variant", strict)
    if FXo_matrix is not None and np.size(FXo_matrix):
        attr_sq = row_norms(FXo_matrix) ** 2
        total += _weighted_excess(dist.probs, attr_sq, "mse_closed_form_variant", strict)
    return total / samples


def _trial_scales(probs: np.ndarray, M: int, trials: int, rng: np.random.Generator,
                  rescale: bool = True):
    """Yield trials x N blocks of per-point reconstruction scales"""
    n = len(probs)
    block = max(1, _MC_BLOCK_ENTRIES // max(n, M))
    done = 0
    while done < trials:
        size = min(block, trials - done)
        draws = _inverse_cdf(probs, rng.random((size, M)))
        weights = 1.0 / (M * probs[draws]) if rescale else np.ones_like(draws, dtype=float)
        offsets = draws + n * np.arange(size)[:, None]
        scales = np.bincount(offsets.ravel(), weights=weights.ravel(),
                             minlength=n * size).reshape(size, n)
        yield scales
        done += size


def reconstruction_error_trials(features, dist: ResamplingDistribution, M: int, trials: int,
                                seed: Optional[int] = None) -> np.ndarray:
    """reconstruction_error for each of `trials` independent resamples"""
    if M < 1 or trials < 1:
        raise BadParams(f"M and trials must be positive, got M={M}, trials={trials}")
    if not np.any(dist.probs > 0):
        raise ZeroSupport("cannot sample from a distribution with no mass")
    sq = row_norms(features) ** 2
    rng = np.random.default_rng(seed)
    errors = [((scales - 1.0) ** 2) @ sq for scales in _trial_scales(dist.probs, M, trials, rng)]
    return np.concatenate(errors)


def empirical_mse(features, dist: ResamplingDistribution, M: int, trials: int,
                  seed: Optional[int] = None) -> float:
    """Monte-Carlo mean of reconstruction_error"""
    return float(np.mean(reconstruction_error_trials(features, dist, M, trials, seed)))


@dataclass
class UnbiasednessReport:
    """Monte-Carlo summary of the rescaled reconstruction"""
    relative_bias: float
    variance: float
    mean_error: float
    mean_reconstruction: np.ndarray
    trials: int
    samples: int
    rescaled: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'relative_bias': self.relative_bias,
            'variance': self.variance,
            'mean_error': self.mean_error,
            'trials': self.trials,
            'samples': self.samples,
            'rescaled': self.rescaled
        }


def unbiasedness_check(features, dist: ResamplingDistribution, M: int, trials: int,
                       seed: Optional[int] = None, rescale: bool = True) -> UnbiasednessReport:
    """
    Empirical mean of the zero-padded reconstruction over many resamples

    Args:
        features: N x K feature rows
        dist: Sampling distribution
        M: Draws per resample
        trials: Number of resamples
        seed: RNG seed
        rescale: Apply the 1/(M pi_i) rescaling; without it the mean is M pi_i f_i

    Returns:
        UnbiasednessReport with ||mean - f||_F / ||f||_F as relative_bias
    """
    F = feature_matrix(features)
    if F.shape[0] != dist.n_points:
        raise DimensionMismatch(f"features have {F.shape[0]} rows, distribution has {dist.n_points}")
    if M < 1 or trials < 1:
        raise BadParams(f"M and trials must be positive, got M={M}, trials={trials}")
    sq = np.sum(F ** 2, axis=1)
    unsupported = (dist.probs == 0) & (sq > 0)
    if unsupported.any():
        raise UnsupportedFeature(f"{int(unsupported.sum())} nonzero feature rows have zero probability "
                                 f"(first: row {int(np.argmax(unsupported))})")

    rng = np.random.default_rng(seed)
    n = dist.n_points
    sum_scale = np.zeros(n)
    sum_scale_sq = np.zeros(n)
    sum_error = 0.0
    for scales in _trial_scales(dist.probs, M, trials, rng, rescale):
        sum_scale += scales.sum(axis=0)
        sum_scale_sq += (scales ** 2).sum(axis=0)
        sum_error += float((((scales - 1.0) ** 2) @ sq).sum())

    mean_scale = sum_scale / trials
    variance = float(np.maximum(sum_scale_sq / trials - mean_scale ** 2, 0.0) @ sq)
    mean_reconstruction = mean_scale[:, None] * F
    norm_f = np.sqrt(sq.sum())
    bias = float(np.linalg.norm(mean_reconstruction - F) / norm_f) if norm_f > 0 else 0.0
    return UnbiasednessReport(bias, variance, sum_error / trials, mean_reconstruction,
                              trials, M, rescale)


def optimal_on_simplex(sq_norms: np.ndarray, ftol: float = 1e-14, max_iter: int = 1000) -> np.ndarray:
    """
    Numerically minimize sum_i a_i / pi_i over the probability simplex

    Independent check on the closed-form minimizers; only meant for small N.
    """
    a = np.asarray(sq_norms, dtype=float)
    if np.any(a < 0) or not np.any(a > 0):
        raise BadParams("objective weights must be nonnegative and not all zero")
    a = a / a.sum()
    n = len(a)

    result = minimize(
        lambda p: float(np.sum(a / p)),
        np.full(n, 1.0 / n),
        jac=lambda p: -a / p ** 2,
        method='SLSQP',
        bounds=[(1e-12, 1.0)] * n,
        constraints=[{'type': 'eq', 'fun': lambda p: np.sum(p) - 1.0,
                      'jac': lambda p: np.ones_like(p)}],
        options={'ftol': ftol, 'maxiter': max_iter}
    )
    if not result.success:
        logger.warning(f"Simplex minimization stopped early: {result.message}")
    p = np.maximum(result.x, 0.0)
    return p / p.sum()


def worst_rotation_error(F: np.ndarray, cloud: PointCloud, dist: ResamplingDistribution,
                         rotations: int = 200, seed: Optional[int] = None,
                         samples: int = 1) -> float:
    """
    Largest expected error of features F [X_c R, X_o] over random rotations R

    A lower bound for the rotation-variant closed form.
    """
    F = np.asarray(F, dtype=float)
    if F.shape[1] != cloud.n_points:
        raise DimensionMismatch(f"F has {F.shape[1]} columns, cloud has {cloud.n_points} points")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(rotations):
        rotated = RigidTransform.random(rng, max_shift=0.0).apply(cloud.coords)
        features = F @ np.hstack([rotated, cloud.attrs])
        worst = max(worst, mse_closed_form(features, dist, samples))
    return worst


def write_distribution(dist: ResamplingDistribution, path):
    """CSV with columns index, pi"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['index', 'pi'])
        for i, p in enumerate(dist.probs):
            writer.writerow([i, format(float(p), '.17g')])


def write_draws(result: ResampleResult, path):
    """CSV with columns slot, index, weight"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['slot', 'index', 'weight'])
        for slot, (i, w) in enumerate(zip(result.indices, result.weights)):
            writer.writerow([slot, int(i), format(float(w), '.17g')])
