"""
Graph Construction
Epsilon-neighbourhood graphs over point coordinates, shift operators and spectral tools
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.spatial import cKDTree

from .core import PointCloud, default_workers
from .errors import (
    BadParams,
    BandwidthTooLarge,
    ConvergenceFailure,
    DegenerateCloud,
    IsolatedNode,
    WrongShiftKind,
)

logger = logging.getLogger(__name__)

SHIFT_KINDS = ('adjacency', 'transition', 'normalized-adjacency', 'laplacian')
ISOLATED_POLICIES = ('self-loop', 'strict')

_KIND_ALIASES = {'normalized': 'normalized-adjacency', 'norm': 'normalized-adjacency'}

# Above this size the sparse Lanczos path replaces the dense eigensolver
DENSE_EIGEN_LIMIT = 600


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Symmetric weighted adjacency over the points of a cloud"""
    adjacency: sp.csr_matrix
    degrees: np.ndarray
    sigma: float
    tau: float

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    def isolated(self) -> np.ndarray:
        return np.flatnonzero(self.degrees == 0)

    def to_dict(self) -> Dict[str, float]:
        """Summary for manifests and logs"""
        return {
            'nodes': self.n,
            'edges': self.n_edges,
            'sigma': self.sigma,
            'tau': self.tau,
            'isolated': int(len(self.isolated()))
        }


@dataclass(eq=False)
class ShiftOperator:
    """
    Graph shift operator of a given kind

    degrees holds the degree vector used to form the operator (after any
    self-loop patching) so that transition spectra can be symmetrized.
    """
    kind: str
    matrix: sp.csr_matrix
    degrees: np.ndarray
    _lambda_max: Optional[float] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def lambda_max(self) -> float:
        if self._lambda_max is None:
            self._lambda_max = lambda_max(self)
        return self._lambda_max

    def symmetric_form(self) -> sp.csr_matrix:
        """Symmetric matrix with the same spectrum as this operator"""
        if self.kind != 'transition':
            return self.matrix
        root = np.sqrt(self.degrees)
        return sp.csr_matrix(sp.diags(root) @ self.matrix @ sp.diags(1.0 / root))


def estimate_sigma(cloud: PointCloud, k: int = 10, subsample: int = 1000,
                   seed: int = 0, workers: Optional[int] = None) -> float:
    """
    Mean distance to the k-th nearest neighbour over a random subsample

    Args:
        cloud: Input cloud
        k: Neighbour rank
        subsample: Maximum number of query points
        seed: Subsample RNG seed
        workers: k-d tree query workers (defaults to the environment setting)

    Returns:
        Kernel width estimate
    """
    n = cloud.n_points
    if n < 2:
        raise BadParams("sigma estimation needs at least two points")
    k = min(k, n - 1)
    tree = cKDTree(cloud.coords)
    if n > subsample:
        rng = np.random.default_rng(seed)
        queries = cloud.coords[rng.choice(n, size=subsample, replace=False)]
    else:
        queries = cloud.coords
    distances, _ = tree.query(queries, k=k + 1, workers=workers or default_workers())
    sigma = float(np.mean(distances[:, k]))
    if sigma <= 0:
        raise DegenerateCloud("all sampled k-th neighbour distances are zero")
    logger.debug(f"Estimated sigma={sigma:.6g} from {len(queries)} queries (k={k})")
    return sigma


def build_graph(cloud: PointCloud, sigma: Optional[float] = None, tau: Optional[float] = None,
                k: int = 10, tau_factor: float = 2.0, subsample: int = 1000,
                workers: Optional[int] = None) -> SparseGraph:
    """
    Gaussian-weighted epsilon-neighbourhood graph on the coordinates

    Args:
        cloud: Input cloud; attributes are ignored
        sigma: Kernel width (estimated from k-th neighbour distances when None)
        tau: Distance threshold (tau_factor * sigma when None)
        k: Neighbour rank for the sigma estimate
        tau_factor: Multiplier for the default threshold
        subsample: Query budget for the sigma estimate
        workers: k-d tree query workers for the sigma estimate

    Returns:
        SparseGraph
    """
    if sigma is None:
        sigma = estimate_sigma(cloud, k=k, subsample=subsample, workers=workers)
    if tau is None:
        tau = tau_factor * sigma
    if sigma <= 0 or tau <= 0:
        raise BadParams(f"sigma and tau must be positive, got sigma={sigma}, tau={tau}")

    n = cloud.n_points
    coords = cloud.coords
    tree = cKDTree(coords)
    # widen the query radius, then threshold on the exact squared distance
    pairs = tree.query_pairs(r=tau * (1.0 + 1e-9), output_type='ndarray')
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        diff = coords[i] - coords[j]
        d2 = np.sum(diff ** 2, axis=1)
        keep = d2 <= tau * tau
        i, j, d2 = i[keep], j[keep], d2[keep]
        weights = np.exp(-d2 / (sigma * sigma))
        underflow = int(np.count_nonzero(weights == 0.0))
        if underflow:
            logger.warning(f"{underflow} pairs within tau have weights that underflow to 0 "
                           f"(sigma={sigma:.6g} is too small for tau={tau:.6g}); they are dropped")
    else:
        i = j = np.zeros(0, dtype=int)
        weights = np.zeros(0)

    adjacency = sp.coo_matrix(
        (np.concatenate([weights, weights]), (np.concatenate([i, j]), np.concatenate([j, i]))),
        shape=(n, n)
    ).tocsr()
    adjacency.eliminate_zeros()
    adjacency.sort_indices()
    degrees = np.asarray(adjacency.sum(axis=1)).ravel()

    graph = SparseGraph(adjacency, degrees, float(sigma), float(tau))
    logger.info(f"Built graph with {n} nodes and {graph.n_edges} edges "
                f"(sigma={sigma:.6g}, tau={tau:.6g})")
    isolated = graph.isolated()
    if len(isolated):
        logger.info(f"{len(isolated)} isolated nodes in graph")
    return graph


def shift_operator(graph: SparseGraph, kind: str = 'transition',
                   isolated_policy: str = 'self-loop') -> ShiftOperator:
    """
    Form a graph shift operator

    Args:
        graph: Source graph
        kind: adjacency, transition, normalized-adjacency or laplacian
        isolated_policy: 'self-loop' patches zero-degree nodes with a unit
            self-loop before normalizing; 'strict' raises IsolatedNode

    Returns:
        ShiftOperator
    """
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in SHIFT_KINDS:
        raise BadParams(f"unknown shift kind '{kind}' (expected one of {SHIFT_KINDS})")
    if isolated_policy not in ISOLATED_POLICIES:
        raise BadParams(f"unknown isolated-node policy '{isolated_policy}'")

    W = graph.adjacency
    degrees = graph.degrees

    if kind == 'adjacency':
        return ShiftOperator(kind, W.copy(), degrees.copy())
    if kind == 'laplacian':
        L = sp.diags(degrees) - W
        return ShiftOperator(kind, sp.csr_matrix(L), degrees.copy())

    isolated = degrees == 0
    if isolated.any():
        if isolated_policy == 'strict':
            raise IsolatedNode(f"{int(isolated.sum())} nodes have degree 0 "
                               f"(first: {int(np.argmax(isolated))})")
        logger.warning(f"Adding self-loops to {int(isolated.sum())} isolated nodes")
        W = sp.csr_matrix(W + sp.diags(isolated.astype(float)))
        degrees = degrees + isolated

    if kind == 'transition':
        matrix = sp.diags(1.0 / degrees) @ W
    else:
        inv_root = 1.0 / np.sqrt(degrees)
        matrix = sp.diags(inv_root) @ W @ sp.diags(inv_root)
    return ShiftOperator(kind, sp.csr_matrix(matrix), degrees)


def lambda_max(op: ShiftOperator, rtol: float = 1e-9, max_iter: int = 10000) -> float:
    """
    Largest eigenvalue magnitude of a shift operator

    Transition operators return exactly 1. Other kinds run power iteration
    on A^2, which is positive semidefinite, so that +lambda and -lambda
    pairs do not stall the iteration.
    """
    if op.kind == 'transition':
        return 1.0

    A = op.symmetric_form()
    if A.nnz == 0:
        return 0.0

    v = np.linspace(1.0, 2.0, op.n)
    v /= np.linalg.norm(v)
    for iteration in range(1, max_iter + 1):
        w = A @ v
        u = A @ w
        mu = float(w @ w)
        if mu == 0.0:
            # start vector in the null space
            v = np.random.default_rng(iteration).normal(size=op.n)
            v /= np.linalg.norm(v)
            continue
        residual = np.linalg.norm(u - mu * v)
        if residual <= rtol * mu:
            logger.debug(f"lambda_max({op.kind}) converged after {iteration} iterations")
            return float(np.sqrt(mu))
        v = u / np.linalg.norm(u)

    raise ConvergenceFailure(f"lambda_max did not converge in {max_iter} iterations")


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """
    Truncated eigendecomposition of a shift operator

    vectors are orthonormal eigenvectors of the symmetric form. For
    transition operators transition_vectors holds the matching
    eigenvectors of D^-1 W, which are not orthogonal.
    """
    eigenvalues: np.ndarray
    vectors: np.ndarray
    kind: str
    largest: bool = True
    transition_vectors: Optional[np.ndarray] = None
    degrees: Optional[np.ndarray] = None

    @property
    def bandwidth(self) -> int:
        return self.vectors.shape[1]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive"""
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def truncated_eigenbasis(op: ShiftOperator, b: int, largest: bool = True) -> SpectralBasis:
    """
    Top-b (or bottom-b) eigenpairs of a shift operator

    Args:
        op: Shift operator
        b: Bandwidth, 1 <= b <= n
        largest: Take the largest eigenvalues; False takes the smallest

    Returns:
        SpectralBasis with eigenvalues in descending order
    """
    n = op.n
    if b < 1:
        raise BadParams(f"bandwidth must be at least 1, got {b}")
    if b > n:
        raise BandwidthTooLarge(f"bandwidth {b} exceeds node count {n}")

    S = op.symmetric_form()
    if n <= DENSE_EIGEN_LIMIT or b >= n // 2:
        values, vectors = np.linalg.eigh(S.toarray())
        order = np.argsort(values)[::-1]
        order = order[:b] if largest else order[-b:]
        values, vectors = values[order], vectors[:, order]
    else:
        v0 = np.random.default_rng(0).normal(size=n)
        try:
            values, vectors = eigsh(S, k=b, which='LA' if largest else 'SA', v0=v0)
        except ArpackNoConvergence as e:
            raise ConvergenceFailure(f"Lanczos did not converge for b={b}: {e}")
        order = np.argsort(values)[::-1]
        values, vectors = values[order], vectors[:, order]

    vectors = _fix_signs(vectors)
    transition_vectors = None
    if op.kind == 'transition':
        transition_vectors = vectors / np.sqrt(op.degrees)[:, None]

    logger.debug(f"Computed {b} eigenpairs of {op.kind} operator (n={n})")
    return SpectralBasis(values, vectors, op.kind, largest, transition_vectors, op.degrees)


def graph_fourier(basis: SpectralBasis, signal: np.ndarray) -> np.ndarray:
    """Graph Fourier coefficients of a signal in an orthonormal basis"""
    return basis.vectors.T @ np.asarray(signal, dtype=float)


def inverse_graph_fourier(basis: SpectralBasis, coefficients: np.ndarray) -> np.ndarray:
    return basis.vectors @ np.asarray(coefficients, dtype=float)


def require_kind(op: ShiftOperator, kind: str, purpose: str):
    if op.kind != kind:
        raise WrongShiftKind(f"{purpose} requires a {kind} shift, got {op.kind}")


def dump_edges(graph: SparseGraph, path) -> int:
    """
    Write the upper-triangle edge list as CSV (i, j, w)

    Returns:
        Number of edges written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    upper = sp.triu(graph.adjacency, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['i', 'j', 'w'])
        for idx in order:
            writer.writerow([int(upper.row[idx]), int(upper.col[idx]),
                             format(float(upper.data[idx]), '.17g')])
    logger.info(f"Wrote {len(order)} edges to {path}")
    return len(order)
