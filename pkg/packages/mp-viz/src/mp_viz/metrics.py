"""
MP-Viz Metrics

Embedding quality (trustworthiness, continuity, kNN preservation), k-means
with k-means++ seeding, silhouette scores and the cluster-then-pick step that
turns a map into a short list of representative candidates.

Distance-rank ties are broken by ascending index everywhere.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .atomic import atomic_write_text
from .config import format_key_values
from .dataset import FLOAT_FORMAT, CandidateSet, pairwise_sq_distances
from .errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyClusterRepaired,
    InputError,
    KTooLarge,
    MissingColumn,
    NonNumericCell,
    SingleCluster,
)

logger = logging.getLogger(__name__)

DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITER = 300
SWEEP_KS = range(2, 13)


def neighbor_ranks(Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(order, ranks): order[i] lists points by distance from i, self first;
    ranks[i, j] is j's position in that list (1 = nearest neighbour)."""
    D = np.array(pairwise_sq_distances(Z).values, copy=True)
    np.fill_diagonal(D, -1.0)
    order = np.argsort(D, axis=1, kind="stable")
    ranks = np.empty_like(order)
    rows = np.arange(D.shape[0])[:, None]
    ranks[rows, order] = np.arange(D.shape[0])[None, :]
    return order, ranks


def default_neighbors(n: int) -> int:
    """Largest k <= 12 that trustworthiness accepts for n points."""
    return max(1, min(12, (n - 1) // 2))


def _check_pair(X: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch((X.shape[0], Y.shape[1]), Y.shape)
    return X, Y


def _intrusion_score(high: np.ndarray, low: np.ndarray, k: int) -> float:
    n = high.shape[0]
    if not 1 <= k < n / 2:
        raise KTooLarge(k, n, "1 <= k < N/2")
    _, high_ranks = neighbor_ranks(high)
    low_order, _ = neighbor_ranks(low)
    nn_low = low_order[:, 1 : k + 1]
    penalty = np.clip(high_ranks[np.arange(n)[:, None], nn_low] - k, 0, None).sum()
    return float(1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * penalty)


def trustworthiness(X: np.ndarray, Y: np.ndarray, k: int) -> float:
    """Penalizes low-dimensional neighbours that are far apart in X."""
    X, Y = _check_pair(X, Y)
    return _intrusion_score(X, Y, k)


def continuity(X: np.ndarray, Y: np.ndarray, k: int) -> float:
    """Penalizes high-dimensional neighbours torn apart in Y."""
    X, Y = _check_pair(X, Y)
    return _intrusion_score(Y, X, k)


def knn_preservation(X: np.ndarray, Y: np.ndarray, k: int) -> float:
    X, Y = _check_pair(X, Y)
    n = X.shape[0]
    if not 1 <= k < n:
        raise KTooLarge(k, n, "1 <= k < N")
    order_x, _ = neighbor_ranks(X)
    _, ranks_y = neighbor_ranks(Y)
    nn_x = order_x[:, 1 : k + 1]
    shared = ranks_y[np.arange(n)[:, None], nn_x] <= k
    return float(shared.sum(axis=1).mean() / k)


# -- clustering ----------------------------------------------------------------


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_trace: Tuple[float, ...] = ()
    repaired: int = 0

    def __iter__(self) -> Iterator[Any]:
        return iter((self.labels, self.centroids, self.inertia))


def _sq_to_centroids(Y: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = Y[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _plusplus(Y: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = Y.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((Y - Y[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            nxt = next(i for i in range(n) if i not in chosen)
        chosen.append(nxt)
        closest = np.minimum(closest, ((Y - Y[nxt]) ** 2).sum(axis=1))
    return Y[chosen].copy()


def _lloyd(Y: np.ndarray, centroids: np.ndarray, max_iter: int) -> KMeansResult:
    k = centroids.shape[0]
    labels = None
    trace: List[float] = []
    repaired = 0
    for _ in range(max_iter):
        new_labels = np.argmin(_sq_to_centroids(Y, centroids), axis=1)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            own = ((Y - centroids[new_labels]) ** 2).sum(axis=1)
            donors = counts[new_labels] > 1
            far = int(np.flatnonzero(donors)[np.argmax(own[donors])])
            counts[new_labels[far]] -= 1
            new_labels[far] = empty
            counts[empty] = 1
            repaired += 1
            warnings.warn(
                EmptyClusterRepaired(f"cluster {empty} emptied; reseeded with point {far}"),
                stacklevel=3,
            )
            logger.warning("k-means: cluster %d emptied, reseeded with point %d", empty, far)
        centroids = np.vstack([Y[new_labels == c].mean(axis=0) for c in range(k)])
        trace.append(float(((Y - centroids[new_labels]) ** 2).sum()))
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    assert labels is not None
    return KMeansResult(labels, centroids, trace[-1], tuple(trace), repaired)


def _relabel(result: KMeansResult) -> KMeansResult:
    """Number clusters by first appearance in row order."""
    _, first = np.unique(result.labels, return_index=True)
    old_order = np.unique(result.labels)[np.argsort(first)]
    mapping = np.empty(result.centroids.shape[0], dtype=np.int64)
    mapping[old_order] = np.arange(old_order.size)
    return KMeansResult(
        mapping[result.labels],
        result.centroids[old_order],
        result.inertia,
        result.inertia_trace,
        result.repaired,
    )


def kmeans(
    Y: np.ndarray,
    k: int,
    seed: int = 42,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> KMeansResult:
    """Best of `restarts` Lloyd runs from k-means++ seeds."""
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    if not 1 <= k <= n:
        raise KTooLarge(k, n, "1 <= k <= N")
    rng = np.random.default_rng(seed)
    best: Optional[KMeansResult] = None
    for _ in range(max(1, restarts)):
        result = _lloyd(Y, _plusplus(Y, k, rng), max_iter)
        if best is None or result.inertia < best.inertia:
            best = result
    assert best is not None
    logger.info("k-means: k=%d, inertia %.6g", k, best.inertia)
    return _relabel(best)


def silhouette(Y: np.ndarray, labels: Sequence[int]) -> float:
    Y = np.asarray(Y, dtype=np.float64)
    labels = np.asarray(labels)
    uniq, codes = np.unique(labels, return_inverse=True)
    if uniq.size < 2:
        raise SingleCluster()
    D = np.sqrt(pairwise_sq_distances(Y).values)
    onehot = np.eye(uniq.size)[codes]
    sums = D @ onehot
    counts = onehot.sum(axis=0)
    n = Y.shape[0]
    own_count = counts[codes]
    a = np.divide(
        sums[np.arange(n), codes], own_count - 1,
        out=np.zeros(n), where=own_count > 1,
    )
    means = sums / counts
    means[np.arange(n), codes] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.divide(b - a, denom, out=np.zeros(n), where=denom > 0)
    s[own_count == 1] = 0.0
    return float(s.mean())


def silhouette_sweep(
    Y: np.ndarray, ks: Sequence[int] = SWEEP_KS, seed: int = 42, restarts: int = DEFAULT_RESTARTS
) -> List[Tuple[int, float]]:
    """Silhouette of the k-means labelling for each k with 2 <= k < N."""
    n = np.asarray(Y).shape[0]
    return [
        (k, silhouette(Y, kmeans(Y, k, seed, restarts).labels)) for k in ks if 2 <= k < n
    ]


def pick_representatives(
    candidates: CandidateSet, labels: Sequence[int], centroids: np.ndarray, Y: np.ndarray
) -> List[str]:
    """Per cluster, the candidate whose embedded point sits nearest the centroid."""
    Y = np.asarray(Y, dtype=np.float64)
    labels = np.asarray(labels)
    if Y.shape[0] != candidates.n or labels.shape[0] != candidates.n:
        raise DimensionMismatch((candidates.n,), (Y.shape[0], labels.shape[0]))
    picks: List[str] = []
    for c in range(np.asarray(centroids).shape[0]):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            continue
        gaps = ((Y[members] - centroids[c]) ** 2).sum(axis=1)
        picks.append(candidates.ids[int(members[np.argmin(gaps)])])
    return picks


# -- reports -------------------------------------------------------------------


@dataclass(frozen=True)
class QualityReport:
    trustworthiness: float
    continuity: float
    knn_preservation: float
    silhouette: Optional[float]
    k_used: int
    clusters: int
    ids: Tuple[str, ...]
    labels: np.ndarray
    representative_ids: Tuple[str, ...]
    method: Optional[str] = None
    sweep: Tuple[Tuple[int, float], ...] = field(default_factory=tuple)

    def pairs(self) -> List[Tuple[str, Any]]:
        pairs: List[Tuple[str, Any]] = []
        if self.method:
            pairs.append(("method", self.method))
        pairs += [
            ("n", len(self.ids)),
            ("k_used", self.k_used),
            ("trustworthiness", self.trustworthiness),
            ("continuity", self.continuity),
            ("knn_preservation", self.knn_preservation),
            ("clusters", self.clusters),
            ("silhouette", self.silhouette),
            ("representative_ids", list(self.representative_ids)),
        ]
        pairs += [(f"sweep.k{k}", score) for k, score in self.sweep]
        return pairs


def build_quality_report(
    candidates: CandidateSet,
    X: np.ndarray,
    Y: np.ndarray,
    clusters: int,
    k: Optional[int] = None,
    seed: int = 42,
    restarts: int = DEFAULT_RESTARTS,
    method: Optional[str] = None,
    sweep: bool = False,
) -> QualityReport:
    X, Y = _check_pair(X, Y)
    candidates.require_rows(2)
    k = default_neighbors(candidates.n) if k is None else k
    fit = kmeans(Y, clusters, seed, restarts)
    score = silhouette(Y, fit.labels) if 2 <= clusters < candidates.n else None
    return QualityReport(
        trustworthiness=trustworthiness(X, Y, k),
        continuity=continuity(X, Y, k),
        knn_preservation=knn_preservation(X, Y, k),
        silhouette=score,
        k_used=k,
        clusters=clusters,
        ids=candidates.ids,
        labels=fit.labels,
        representative_ids=tuple(pick_representatives(candidates, fit.labels, fit.centroids, Y)),
        method=method,
        sweep=tuple(silhouette_sweep(Y, seed=seed, restarts=restarts)) if sweep else (),
    )


def labels_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".labels.csv")


def save_labels(path: Union[str, Path], ids: Sequence[str], labels: Sequence[int]) -> Path:
    frame = pd.DataFrame({"id": list(ids), "label": np.asarray(labels).astype(int)})
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def load_labels(path: Union[str, Path]) -> Dict[str, int]:
    """Read an id,label table (cluster labels or ground-truth classes)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: file not found")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    for col in ("id", "label"):
        if col not in frame.columns:
            raise MissingColumn(col, path.name)
    labels: Dict[str, int] = {}
    for row, (cid, label) in enumerate(zip(frame["id"], frame["label"]), start=1):
        if cid in labels:
            raise DuplicateId(cid, row)
        try:
            labels[cid] = int(label)
        except ValueError:
            raise NonNumericCell(row, "label", label) from None
    return labels


def save_report(report: QualityReport, path: Union[str, Path]) -> Tuple[Path, Path]:
    """Flat key/value report plus `<stem>.labels.csv` (id, label)."""
    report_path = atomic_write_text(path, format_key_values(report.pairs()))
    return report_path, save_labels(labels_path(path), report.ids, report.labels)


EmbeddingInput = Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]


def compare_embeddings(
    X: np.ndarray,
    embeddings: Mapping[str, EmbeddingInput],
    k: Optional[int] = None,
    true_labels: Optional[Sequence[int]] = None,
    clusters: Optional[int] = None,
    seed: int = 42,
    restarts: int = DEFAULT_RESTARTS,
) -> pd.DataFrame:
    """One row per method. A value may be (Y, rows) when only some rows of X
    were embedded. Silhouette uses `true_labels` when given, else k-means
    labels with `clusters`, else it is left empty."""
    X = np.asarray(X, dtype=np.float64)
    truth = None if true_labels is None else np.asarray(true_labels)
    records: List[Dict[str, Any]] = []
    for name, value in embeddings.items():
        if isinstance(value, tuple):
            Y, rows = value
            rows = np.asarray(rows)
        else:
            Y, rows = value, np.arange(X.shape[0])
        Y = np.asarray(Y, dtype=np.float64)
        Xs = X[rows]
        kk = default_neighbors(len(rows)) if k is None else k
        score: Optional[float] = None
        if truth is not None:
            score = silhouette(Y, truth[rows])
        elif clusters is not None and 2 <= clusters < len(rows):
            score = silhouette(Y, kmeans(Y, clusters, seed, restarts).labels)
        records.append(
            {
                "method": name,
                "n": len(rows),
                "k": kk,
                "trustworthiness": trustworthiness(Xs, Y, kk),
                "continuity": continuity(Xs, Y, kk),
                "knn_preservation": knn_preservation(Xs, Y, kk),
                "silhouette": np.nan if score is None else score,
            }
        )
    return pd.DataFrame.from_records(
        records,
        columns=["method", "n", "k", "trustworthiness", "continuity", "knn_preservation", "silhouette"],
    )


def save_comparison(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    return atomic_write_text(
        path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    )
