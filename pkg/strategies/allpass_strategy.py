"""
All-Pass Strategy
Preserves the overall geometry; uniform unless attributes are present
"""

import numpy as np

from pointcloud.resampling import ResamplingDistribution, dist_allpass

from .base_strategy import ResamplingStrategy, StrategyContext


class AllpassStrategy(ResamplingStrategy):
    """h(A) = I"""

    name = 'allpass'
    description = 'identity filter; weights points by attribute energy'
    requires_graph = False

    def distribution(self, context: StrategyContext) -> ResamplingDistribution:
        return dist_allpass(context.cloud, context.c, context.beta)

    def features(self, context: StrategyContext) -> np.ndarray:
        return np.array(context.cloud.matrix)
