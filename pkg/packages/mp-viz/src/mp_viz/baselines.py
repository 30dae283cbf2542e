"""
MP-Viz Baselines

PCA and Isomap, the comparison methods for the t-SNE maps. Isomap is kept in
its three classic pieces (kNN graph, graph geodesics, classical MDS) so each
can be checked on its own.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import csgraph

from .config import CONNECT_POLICIES
from .dataset import DistanceMatrix, pairwise_sq_distances
from .errors import ConfigError, DisconnectedGraph, RankDeficient

logger = logging.getLogger(__name__)

DEFAULT_K = 10
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class PcaResult:
    projection: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray


@dataclass(frozen=True)
class NeighborGraph:
    """Union-symmetrized kNN graph; weights are Euclidean edge lengths."""

    weights: sparse.csr_matrix
    k: int
    neighbors: np.ndarray
    euclidean: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def edges(self) -> List[Tuple[int, int]]:
        rows, cols = self.weights.nonzero()
        return sorted((int(i), int(j)) for i, j in zip(rows, cols) if i < j)

    def degrees(self) -> np.ndarray:
        return np.diff(self.weights.indptr)

    def components(self) -> List[List[int]]:
        return _components(self.weights)


@dataclass(frozen=True)
class IsomapResult:
    embedding: np.ndarray
    embedded_mask: np.ndarray
    components: List[List[int]]

    @property
    def unembedded(self) -> np.ndarray:
        return np.flatnonzero(~self.embedded_mask)


def _descending(eigenvalues: np.ndarray) -> np.ndarray:
    """Order by descending eigenvalue, ties by ascending index."""
    return np.lexsort((np.arange(eigenvalues.size), -eigenvalues))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        pivot = int(np.argmax(np.abs(out[:, j])))
        if out[pivot, j] < 0:
            out[:, j] = -out[:, j]
    return out


def _numeric_rank(eigenvalues: np.ndarray, size: int) -> int:
    top = float(eigenvalues.max()) if eigenvalues.size else 0.0
    if top <= 0:
        return 0
    tol = top * size * np.finfo(np.float64).eps
    return int(np.count_nonzero(eigenvalues > tol))


def pca_project(X: np.ndarray, d: int) -> PcaResult:
    X = np.asarray(X, dtype=np.float64)
    n, k = X.shape
    if d < 1:
        raise ConfigError(f"PCA needs d >= 1, got {d}")
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / max(n - 1, 1)
    w, V = linalg.eigh(cov)
    order = _descending(w)
    w, V = w[order], V[:, order]
    rank = _numeric_rank(w, max(n, k))
    if d > rank:
        raise RankDeficient(d, rank)

    components = _fix_signs(V[:, :d])
    variance = np.clip(w, 0.0, None)
    ratio = variance[:d] / variance.sum()
    logger.info("PCA: explained variance %s", ", ".join(f"{r:.3f}" for r in ratio))
    return PcaResult(centered @ components, components, ratio)


def knn_graph(X: np.ndarray, k: int) -> NeighborGraph:
    """Each point linked to its k nearest neighbours (ties by lower index), then union."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ConfigError(f"k must satisfy 1 <= k < N={n}, got {k}")
    sq = pairwise_sq_distances(X).values
    euclidean = np.sqrt(sq)
    ranked = np.array(sq, copy=True)
    np.fill_diagonal(ranked, np.inf)
    neighbors = np.argsort(ranked, axis=1, kind="stable")[:, :k]

    rows = np.repeat(np.arange(n), k)
    cols = neighbors.ravel()
    data = np.maximum(euclidean[rows, cols], _TINY)
    directed = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    weights = directed.maximum(directed.T).tocsr()
    weights.sort_indices()
    return NeighborGraph(weights, k, neighbors, euclidean)


def _components(weights: sparse.spmatrix) -> List[List[int]]:
    count, labels = csgraph.connected_components(weights, directed=False)
    groups: List[List[int]] = [[] for _ in range(count)]
    for node, label in enumerate(labels):
        groups[label].append(node)
    return sorted(groups, key=lambda g: g[0])


def _bridge_components(graph: NeighborGraph, comps: List[List[int]]) -> sparse.csr_matrix:
    """Join components along the MST of their closest point pairs."""
    c = len(comps)
    gap = np.zeros((c, c))
    pairs = {}
    for a in range(c):
        for b in range(a + 1, c):
            block = graph.euclidean[np.ix_(comps[a], comps[b])]
            i, j = np.unravel_index(int(np.argmin(block)), block.shape)
            pairs[(a, b)] = (comps[a][i], comps[b][j])
            gap[a, b] = max(block[i, j], _TINY)
    tree = csgraph.minimum_spanning_tree(gap).tocoo()
    weights = graph.weights.tolil()
    for a, b in sorted(zip(tree.row.tolist(), tree.col.tolist())):
        i, j = pairs[(min(a, b), max(a, b))]
        length = max(graph.euclidean[i, j], _TINY)
        weights[i, j] = length
        weights[j, i] = length
        logger.info("bridged components %d and %d via points %d-%d (%.4g)", a, b, i, j, length)
    return weights.tocsr()


def _shortest_paths(weights: sparse.spmatrix) -> np.ndarray:
    paths = csgraph.shortest_path(weights, method="D", directed=False)
    paths = np.minimum(paths, paths.T)
    np.fill_diagonal(paths, 0.0)
    return paths


def geodesic_distances(graph: NeighborGraph, connect: str = "strict") -> DistanceMatrix:
    """Squared shortest-path lengths over the graph.

    `strict` raises on a disconnected graph, `mst` bridges the components
    first. Dropping components is Isomap's job (`connect="largest"`).
    """
    if connect not in ("strict", "mst"):
        raise ConfigError(f"geodesic_distances supports strict or mst, got '{connect}'")
    weights = graph.weights
    comps = graph.components()
    if len(comps) > 1:
        if connect == "strict":
            raise DisconnectedGraph(comps)
        weights = _bridge_components(graph, comps)
    paths = _shortest_paths(weights)
    return DistanceMatrix(paths * paths)


def classical_mds(D: DistanceMatrix, d: int) -> np.ndarray:
    values = D.values
    n = values.shape[0]
    if not 1 <= d <= n:
        raise ConfigError(f"MDS needs 1 <= d <= N={n}, got {d}")
    B = -0.5 * (
        values
        - values.mean(axis=0, keepdims=True)
        - values.mean(axis=1, keepdims=True)
        + values.mean()
    )
    B = 0.5 * (B + B.T)
    w, V = linalg.eigh(B)
    order = _descending(w)
    w, V = np.clip(w[order], 0.0, None), _fix_signs(V[:, order])
    return V[:, :d] * np.sqrt(w[:d])


def isomap(X: np.ndarray, k: int = DEFAULT_K, d: int = 2, connect: str = "largest") -> IsomapResult:
    if connect not in CONNECT_POLICIES:
        raise ConfigError(f"unknown connect policy '{connect}'")
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    graph = knn_graph(X, k)
    comps = graph.components()
    mask = np.ones(n, dtype=bool)

    if len(comps) > 1 and connect == "largest":
        keep = max(comps, key=len)
        mask[:] = False
        mask[keep] = True
        dropped = n - len(keep)
        logger.warning(
            "kNN graph has %d components; embedding the largest (%d points), %d unembedded",
            len(comps), len(keep), dropped,
        )
        sub = graph.weights[keep][:, keep]
        paths = _shortest_paths(sub)
        geo = DistanceMatrix(paths * paths)
    else:
        geo = geodesic_distances(graph, connect)

    embedding = classical_mds(geo, d)
    logger.info("Isomap: k=%d, %d/%d points embedded", k, int(mask.sum()), n)
    return IsomapResult(embedding, mask, comps)
