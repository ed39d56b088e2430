"""
Baseline Strategies
Uniform resampling and the pairwise-difference variation baseline
"""

import numpy as np

from pointcloud.features import pairwise_variation
from pointcloud.resampling import ResamplingDistribution, dist_pairwise, dist_uniform

from .base_strategy import ResamplingStrategy, StrategyContext


class UniformStrategy(ResamplingStrategy):
    name = 'uniform'
    description = 'every point equally likely'
    requires_graph = False

    def distribution(self, context: StrategyContext) -> ResamplingDistribution:
        return dist_uniform(context.cloud.n_points).with_floor(context.beta)

    def features(self, context: StrategyContext) -> np.ndarray:
        return np.array(context.cloud.matrix)


class PairwiseStrategy(ResamplingStrategy):
    """Weights points by sum_j W_ij ||x_i - x_j||^2; misses contours between faces"""

    name = 'pairwise'
    description = 'pairwise-difference variation baseline'

    def distribution(self, context: StrategyContext) -> ResamplingDistribution:
        return dist_pairwise(context.get_graph(), context.cloud, context.beta)

    def features(self, context: StrategyContext) -> np.ndarray:
        return pairwise_variation(context.get_graph(), context.cloud).as_matrix()
