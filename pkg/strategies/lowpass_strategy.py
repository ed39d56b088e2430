"""
Low-Pass Strategies
Denoising-oriented resampling from ideal and Haar-like low-pass filters
"""

import logging

import numpy as np

from pointcloud.filters import ideal_lowpass
from pointcloud.resampling import (
    ResamplingDistribution,
    dist_haar_lowpass,
    dist_ideal_lowpass,
    haar_lowpass_matrix,
)

from .base_strategy import ResamplingStrategy, StrategyContext

logger = logging.getLogger(__name__)

DEFAULT_BANDWIDTH = 50


class IdealLowpassStrategy(ResamplingStrategy):
    """Leverage scores of the first b graph frequencies"""

    name = 'lowpass-ideal'
    description = 'ideal low-pass leverage scores with bandwidth b'

    def _filter(self, context: StrategyContext):
        b = int(self.settings.get('bandwidth') or DEFAULT_BANDWIDTH)
        n = context.cloud.n_points
        if b > n:
            logger.warning(f"Bandwidth {b} exceeds {n} points; using {n}")
            b = n
        shift = context.shift(self.settings.get('shift_kind', 'transition'))
        return ideal_lowpass(shift, b, bool(self.settings.get('transition_basis', False)))

    def distribution(self, context: StrategyContext) -> ResamplingDistribution:
        return dist_ideal_lowpass(self._filter(context), context.cloud, context.c, context.beta)

    def features(self, context: StrategyContext) -> np.ndarray:
        return self._filter(context).project(context.cloud.matrix)


class HaarLowpassStrategy(ResamplingStrategy):
    """Row norms of I + A / |lambda_max|"""

    name = 'lowpass-haar'
    description = 'Haar-like low-pass filter I + A_norm'

    def distribution(self, context: StrategyContext) -> ResamplingDistribution:
        shift = context.shift(self.settings.get('shift_kind', 'transition'))
        return dist_haar_lowpass(shift, context.cloud, context.c, context.beta)

    def features(self, context: StrategyContext) -> np.ndarray:
        shift = context.shift(self.settings.get('shift_kind', 'transition'))
        return haar_lowpass_matrix(shift) @ context.cloud.matrix
