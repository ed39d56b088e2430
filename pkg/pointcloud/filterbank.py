"""
Filter Bank
Split a cloud into graph-filter subbands, resample each, and merge with provenance
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .core import PointCloud, spectral_norm
from .errors import BadParams
from .filters import allpass, apply_filter, haar_highpass, ideal_lowpass
from .graph import ShiftOperator, SparseGraph, shift_operator
from .resampling import (
    ResampleResult,
    ResamplingDistribution,
    dist_allpass,
    dist_haar_lowpass,
    dist_highpass,
    dist_ideal_lowpass,
    haar_lowpass_matrix,
    sample,
)

logger = logging.getLogger(__name__)

SUBBAND_FILTERS = ('allpass', 'haar-highpass', 'haar-lowpass', 'ideal-lowpass')


@dataclass(frozen=True)
class SubbandSpec:
    """
    One subband of a bank

    Subband budgets are independent: M_i = ceil(alpha_i N), and the sum over
    subbands may exceed N because every subband samples with replacement.
    """
    filter_kind: str
    alpha: float
    use_filtered_points: bool = False
    bandwidth: Optional[int] = None
    beta: float = 0.0

    def __post_init__(self):
        if self.filter_kind not in SUBBAND_FILTERS:
            raise BadParams(f"unknown subband filter '{self.filter_kind}' "
                            f"(expected one of {SUBBAND_FILTERS})")
        if not 0.0 < self.alpha <= 1.0:
            raise BadParams(f"subband ratio must lie in (0, 1], got {self.alpha}")
        if self.filter_kind == 'ideal-lowpass' and (self.bandwidth is None or self.bandwidth < 1):
            raise BadParams("ideal-lowpass subband needs a positive bandwidth")
        if not 0.0 <= self.beta <= 1.0:
            raise BadParams(f"floor mix must lie in [0, 1], got {self.beta}")

    def samples_for(self, n_points: int) -> int:
        return math.ceil(self.alpha * n_points)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'filter': self.filter_kind,
            'alpha': self.alpha,
            'use_filtered': self.use_filtered_points,
            'bandwidth': self.bandwidth,
            'beta': self.beta
        }


@dataclass(eq=False)
class SubbandResult:
    """Distribution, draws and sampled point coordinates of one subband"""
    spec: SubbandSpec
    distribution: ResamplingDistribution
    result: ResampleResult
    points: np.ndarray


@dataclass(eq=False)
class BankResult:
    """Per-subband results plus the tagged merge of all draws"""
    subbands: List[SubbandResult]
    indices: np.ndarray = field(init=False)
    tags: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        # ordered reduction: subband 0 draws first, then subband 1, ...
        self.indices = np.concatenate([s.result.indices for s in self.subbands])
        self.weights = np.concatenate([s.result.weights for s in self.subbands])
        self.tags = np.concatenate([np.full(s.result.M, k) for k, s in enumerate(self.subbands)])

    @property
    def count(self) -> int:
        return len(self.indices)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'count': self.count,
            'unique': int(len(np.unique(self.indices))),
            'subbands': [
                dict(s.spec.to_dict(), **s.result.to_dict()) for s in self.subbands
            ]
        }


def _filtered_coords(spec: SubbandSpec, shift: ShiftOperator, cloud: PointCloud) -> np.ndarray:
    coords = cloud.coords
    if spec.filter_kind == 'allpass':
        return apply_filter(allpass(shift), coords)
    if spec.filter_kind == 'haar-highpass':
        return apply_filter(haar_highpass(shift), coords)
    if spec.filter_kind == 'haar-lowpass':
        # halved so the low-pass band stays in the input scale
        return 0.5 * (haar_lowpass_matrix(shift) @ coords)
    return ideal_lowpass(shift, spec.bandwidth).project(coords)


def _subband_distribution(spec: SubbandSpec, shift: ShiftOperator, cloud: PointCloud,
                          c: float) -> ResamplingDistribution:
    if spec.filter_kind == 'allpass':
        return dist_allpass(cloud, c, spec.beta)
    if spec.filter_kind == 'haar-highpass':
        return dist_highpass(shift, cloud, beta=spec.beta)
    if spec.filter_kind == 'haar-lowpass':
        return dist_haar_lowpass(shift, cloud, c, spec.beta)
    return dist_ideal_lowpass(ideal_lowpass(shift, spec.bandwidth), cloud, c, spec.beta)


def run_bank(cloud: PointCloud, graph: SparseGraph, specs: Sequence[SubbandSpec],
             seed: Optional[int] = None, c: Optional[float] = None,
             isolated_policy: str = 'self-loop') -> BankResult:
    """
    Resample every subband of a filter bank

    Args:
        cloud: Input cloud
        graph: Graph over the cloud
        specs: Subband specifications, at least one
        seed: Root seed; each subband gets an independent child seed
        c: Coordinate spectral norm (computed when None)
        isolated_policy: Isolated-node policy for the transition shift

    Returns:
        BankResult
    """
    if not specs:
        raise BadParams("filter bank needs at least one subband")
    if c is None:
        c = spectral_norm(cloud.coords)

    shift = shift_operator(graph, 'transition', isolated_policy)
    children = np.random.SeedSequence(seed).spawn(len(specs))
    subbands = []
    for k, (spec, child) in enumerate(zip(specs, children)):
        sub_seed = int(child.generate_state(1)[0])
        dist = _subband_distribution(spec, shift, cloud, c)
        result = sample(dist, spec.samples_for(cloud.n_points), sub_seed)
        source = _filtered_coords(spec, shift, cloud) if spec.use_filtered_points else cloud.coords
        subbands.append(SubbandResult(spec, dist, result, source[result.indices]))
        logger.info(f"Subband {k} ({spec.filter_kind}, alpha={spec.alpha}): "
                    f"{result.M} draws, {len(result.unique_indices())} unique")

    bank = BankResult(subbands)
    logger.info(f"Filter bank merged {bank.count} draws from {len(specs)} subbands")
    return bank


def merge_draws(cloud: PointCloud, indices: np.ndarray, weights: np.ndarray) -> PointCloud:
    """
    Deduplicated sampled points with a 'weight' attribute

    Points come out in ascending index order; the weight is the accumulated
    squared rescale weight of all draws of that point.
    """
    unique, inverse = np.unique(indices, return_inverse=True)
    accumulated = np.bincount(inverse.ravel(), weights=np.asarray(weights) ** 2, minlength=len(unique))
    selected = cloud.select(unique)
    attrs = np.hstack([selected.attrs, accumulated[:, None]])
    return selected.with_attrs(attrs, list(selected.attr_names) + ['weight'])


def passthrough_synthesis(bank: BankResult, cloud: PointCloud) -> PointCloud:
    """
    Union of all sampled points across subbands

    Draws of subbands on original coordinates are merged by point index.
    A subband that emits filtered coordinates keeps its own points, keyed by
    (subband, index), so a filtered and a raw draw of the same index stay
    two separate points. Raw points come first, then filtered subbands in
    bank order.
    """
    raw = [s for s in bank.subbands if not s.spec.use_filtered_points]
    parts = []
    if raw:
        parts.append(merge_draws(
            cloud,
            np.concatenate([s.result.indices for s in raw]),
            np.concatenate([s.result.weights for s in raw])
        ))
    for sub in bank.subbands:
        if not sub.spec.use_filtered_points:
            continue
        merged = merge_draws(cloud, sub.result.indices, sub.result.weights)
        # first draw of each index, aligned with merge_draws' ascending order
        _, first = np.unique(sub.result.indices, return_index=True)
        parts.append(merged.with_coords(sub.points[first]))

    return PointCloud(
        np.vstack([p.coords for p in parts]),
        np.vstack([p.attrs for p in parts]),
        parts[0].attr_names
    )
