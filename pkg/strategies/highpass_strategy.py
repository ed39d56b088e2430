"""
High-Pass Strategy
Contour-enhancing resampling from the Haar high-pass local variation
"""

import numpy as np

from pointcloud.features import filter_response
from pointcloud.filters import haar_highpass
from pointcloud.resampling import ResamplingDistribution, dist_highpass

from .base_strategy import ResamplingStrategy, StrategyContext


class HighpassStrategy(ResamplingStrategy):
    """
    Weights points by their local variation

    The 'exponent' setting selects squared (2, default) or plain (1)
    response norms.
    """

    name = 'highpass'
    description = 'Haar high-pass local variation; emphasizes contours'

    def distribution(self, context: StrategyContext) -> ResamplingDistribution:
        exponent = int(self.settings.get('exponent', 2))
        return dist_highpass(context.shift('transition'), context.cloud, exponent,
                             context.include_attrs, context.beta)

    def features(self, context: StrategyContext) -> np.ndarray:
        filt = haar_highpass(context.shift('transition'))
        return np.array(filter_response(filt, context.cloud, context.include_attrs).values)
