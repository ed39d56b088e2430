"""
Base Resampling Strategy
All resampling strategies must inherit from this base class
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from pointcloud.core import PointCloud, spectral_norm
from pointcloud.graph import ShiftOperator, SparseGraph, build_graph, shift_operator
from pointcloud.resampling import ResamplingDistribution


@dataclass
class StrategyContext:
    """
    Everything a strategy may need about the cloud it runs on

    The graph is built on first use from the graph settings and shift
    operators are cached per kind.
    """
    cloud: PointCloud
    graph: Optional[SparseGraph] = None
    settings: Dict[str, Any] = field(default_factory=dict)
    _shifts: Dict[str, ShiftOperator] = field(default_factory=dict, repr=False)

    def get_graph(self) -> SparseGraph:
        if self.graph is None:
            self.graph = build_graph(
                self.cloud,
                sigma=self.settings.get('sigma'),
                tau=self.settings.get('tau'),
                k=self.settings.get('k_neighbors', 10),
                tau_factor=self.settings.get('tau_factor', 2.0),
                subsample=self.settings.get('sigma_subsample', 1000),
                workers=self.settings.get('workers'),
            )
        return self.graph

    def shift(self, kind: str = 'transition') -> ShiftOperator:
        if kind not in self._shifts:
            policy = self.settings.get('isolated_policy', 'self-loop')
            self._shifts[kind] = shift_operator(self.get_graph(), kind, policy)
        return self._shifts[kind]

    @property
    def c(self) -> float:
        c = self.settings.get('c')
        return float(c) if c is not None else spectral_norm(self.cloud.coords)

    @property
    def beta(self) -> float:
        return float(self.settings.get('beta') or 0.0)

    @property
    def include_attrs(self) -> bool:
        return bool(self.settings.get('include_attrs', False))

    def signal(self) -> np.ndarray:
        """Coordinates, with attributes appended when requested"""
        return self.cloud.matrix if self.include_attrs else self.cloud.coords


class ResamplingStrategy(ABC):
    """Base class for all resampling strategies"""

    # Registry key; subclasses must override
    name: str = ''
    description: str = ''
    requires_graph: bool = True

    def __init__(self, settings: Optional[Dict[str, Any]] = None):
        """
        Initialize strategy

        Args:
            settings: Strategy settings (exponent, bandwidth, ...) merged from
                the run configuration
        """
        self.settings = dict(settings or {})

    @abstractmethod
    def distribution(self, context: StrategyContext) -> ResamplingDistribution:
        """
        Compute the resampling distribution

        Args:
            context: Cloud, graph and settings

        Returns:
            ResamplingDistribution over the cloud's points
        """
        pass

    @abstractmethod
    def features(self, context: StrategyContext) -> np.ndarray:
        """
        Feature rows f(X) this strategy is designed to preserve

        Returns:
            N x K feature matrix
        """
        pass

    def describe(self) -> str:
        return f"{self.name}: {self.description}"
