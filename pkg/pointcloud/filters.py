"""
Graph Filters
Polynomial graph filters, the Haar-like pair, all-pass and ideal low-pass projections
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import BadParams, DimensionMismatch, IllConditioned, WrongShiftKind
from .graph import ShiftOperator, SpectralBasis, require_kind, truncated_eigenbasis

logger = logging.getLogger(__name__)

NORMALIZATIONS = ('none', 'by-lambda-max')

# Vandermonde systems at or above this condition number are rejected
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class GraphFilter:
    """
    Polynomial h(A) = sum_l h_l A^l over a shift operator

    With by-lambda-max normalization the polynomial is taken in
    A / |lambda_max| instead of A.
    """
    coefficients: np.ndarray
    shift: ShiftOperator
    normalization: str = 'none'
    name: str = 'polynomial'
    fit_residual: Optional[float] = None

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if h.ndim != 1 or len(h) < 1:
            raise BadParams("filter needs at least one coefficient")
        if not np.all(np.isfinite(h)):
            raise BadParams("filter coefficients must be finite")
        if self.normalization not in NORMALIZATIONS:
            raise BadParams(f"unknown normalization '{self.normalization}'")
        h.setflags(write=False)
        object.__setattr__(self, 'coefficients', h)

    @property
    def length(self) -> int:
        return len(self.coefficients)

    @property
    def scale(self) -> float:
        if self.normalization == 'none':
            return 1.0
        lam = abs(self.shift.lambda_max)
        return 1.0 / lam if lam > 0 else 1.0

    def describe(self) -> str:
        return f"{self.name}(h={self.coefficients.tolist()}, shift={self.shift.kind})"


def apply_filter(filt: GraphFilter, signal: np.ndarray) -> np.ndarray:
    """
    Evaluate h(A) X with Horner's rule using sparse products only

    Args:
        filt: Graph filter
        signal: n-vector or n x d matrix

    Returns:
        Filtered signal with the same shape
    """
    X = np.asarray(signal, dtype=float)
    if X.shape[0] != filt.shift.n:
        raise DimensionMismatch(f"signal has {X.shape[0]} rows, graph has {filt.shift.n} nodes")

    A = filt.shift.matrix
    scale = filt.scale
    h = filt.coefficients
    out = h[-1] * X
    for coeff in h[-2::-1]:
        out = scale * (A @ out) + coeff * X
    return out


def frequency_response(filt: GraphFilter, eigenvalues: np.ndarray) -> np.ndarray:
    """h evaluated at the given graph frequencies"""
    lam = np.asarray(eigenvalues, dtype=float) * filt.scale
    return P.polyval(lam, filt.coefficients)


def dense_matrix(filt: GraphFilter) -> np.ndarray:
    """Explicit h(A); only for small graphs"""
    A = filt.shift.matrix.toarray() * filt.scale
    out = np.zeros_like(A)
    for coeff in filt.coefficients[::-1]:
        out = out @ A + coeff * np.eye(A.shape[0])
    return out


def is_shift_invariant(filt: GraphFilter, tol: float = 1e-12) -> bool:
    """True when h(A) 1 = 0, i.e. a transition shift and coefficients summing to zero"""
    return filt.shift.kind == 'transition' and abs(float(np.sum(filt.coefficients))) <= tol


def allpass(shift: ShiftOperator) -> GraphFilter:
    return GraphFilter(np.array([1.0]), shift, 'none', name='allpass')


def haar_highpass(shift: ShiftOperator) -> GraphFilter:
    """I - A on a transition shift; response 1 - lambda"""
    require_kind(shift, 'transition', 'Haar high-pass filter')
    return GraphFilter(np.array([1.0, -1.0]), shift, 'none', name='haar-highpass')


def haar_lowpass(shift: ShiftOperator) -> GraphFilter:
    """I + A / |lambda_max|; response 1 + lambda / |lambda_max|"""
    return GraphFilter(np.array([1.0, 1.0]), shift, 'by-lambda-max', name='haar-lowpass')


@dataclass(frozen=True, eq=False)
class IdealLowPass:
    """Projection onto the first b graph frequencies"""
    bandwidth: int
    basis: SpectralBasis
    shift: ShiftOperator
    oblique: bool = False

    @property
    def vectors(self) -> np.ndarray:
        """V_(b); eigenvectors of D^-1 W when the oblique basis is selected"""
        if self.oblique:
            return self.basis.transition_vectors
        return self.basis.vectors

    def project(self, signal: np.ndarray) -> np.ndarray:
        X = np.asarray(signal, dtype=float)
        if X.shape[0] != self.shift.n:
            raise DimensionMismatch(f"signal has {X.shape[0]} rows, graph has {self.shift.n} nodes")
        U = self.basis.vectors
        if not self.oblique:
            return U @ (U.T @ X)
        # rows of the inverse eigenvector matrix are U^T D^1/2
        root = np.sqrt(self.basis.degrees)
        coeffs = U.T @ (root[:, None] * X if X.ndim == 2 else root * X)
        return self.vectors @ coeffs


def ideal_lowpass(shift: ShiftOperator, b: int, use_transition_basis: bool = False) -> IdealLowPass:
    """
    Ideal low-pass filter with bandwidth b

    Low frequencies are the largest eigenvalues for adjacency-type shifts and
    the smallest for the Laplacian.

    Args:
        shift: Shift operator
        b: Bandwidth
        use_transition_basis: Use the non-orthogonal eigenvectors of D^-1 W
            (transition shift only) instead of the symmetric orthonormal basis

    Returns:
        IdealLowPass
    """
    if use_transition_basis and shift.kind != 'transition':
        raise WrongShiftKind(f"transition basis requested on a {shift.kind} shift")
    basis = truncated_eigenbasis(shift, b, largest=shift.kind != 'laplacian')
    return IdealLowPass(b, basis, shift, oblique=use_transition_basis)


def fit_coefficients(shift: ShiftOperator, target_response: Sequence[Tuple[float, float]],
                     L: int = 2) -> GraphFilter:
    """
    Least-squares filter design from frequency-response constraints

    Args:
        shift: Shift operator the filter will run on
        target_response: (lambda_i, c_i) pairs
        L: Filter length

    Returns:
        GraphFilter whose fit_residual holds the residual norm
    """
    if L < 1:
        raise BadParams(f"filter length must be at least 1, got {L}")
    pairs = np.asarray(target_response, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or len(pairs) == 0:
        raise BadParams("target response must be a non-empty list of (lambda, c) pairs")

    vander = np.vander(pairs[:, 0], L, increasing=True)
    cond = np.linalg.cond(vander)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        raise IllConditioned(f"Vandermonde condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")

    h, _, _, _ = np.linalg.lstsq(vander, pairs[:, 1], rcond=None)
    residual = float(np.linalg.norm(vander @ h - pairs[:, 1]))
    logger.debug(f"Fitted {L} coefficients to {len(pairs)} constraints, residual={residual:.3e}")
    return GraphFilter(h, shift, 'none', name='fitted', fit_residual=residual)
