"""
MP-Viz Pipeline

The generate -> standardize -> embed -> score -> pick chain as plain
functions. The CLI and tools/run_case_studies.py both call these, so a
scripted run and a CLI run with the same seed agree exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .affinity import AffinityMatrix, joint_affinities
from .baselines import DEFAULT_K, isomap, pca_project
from .dataset import CandidateSet, Embedding, pairwise_sq_distances, standardize
from .errors import ConfigError, IdMismatch
from .metrics import (
    DEFAULT_RESTARTS,
    QualityReport,
    build_quality_report,
    compare_embeddings,
    kmeans,
    pick_representatives,
)
from .nsga2 import constraint_filter, nsga2_generate, pareto_fraction
from .surrogate import SurrogateProblem
from .tsne import MomentumSchedule, TsneConfig, run_tsne

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerateResult:
    candidates: CandidateSet
    preservation_ratio: float
    pareto_fraction: float


@dataclass(frozen=True)
class EmbedResult:
    method: str
    ids: Tuple[str, ...]
    coords: np.ndarray
    scaled: np.ndarray
    unembedded: Tuple[str, ...] = ()
    cost_trace: Tuple[Tuple[int, float], ...] = ()
    affinity: Optional[AffinityMatrix] = None

    def as_embedding(self) -> Embedding:
        return Embedding(self.ids, self.coords, self.method, self.unembedded)


def generate(
    problem: SurrogateProblem, pop_size: int = 20, generations: int = 50, seed: int = 42
) -> GenerateResult:
    candidates = nsga2_generate(problem, pop_size, generations, seed)
    _, ratio = constraint_filter(candidates, problem.thresholds)
    return GenerateResult(candidates, ratio, pareto_fraction(candidates))


def embed_candidates(
    candidates: CandidateSet,
    method: str = "tsne",
    scale: str = "zscore",
    dims: int = 2,
    seed: int = 42,
    perplexity: Optional[float] = None,
    iterations: int = 1000,
    learning_rate: float = 100.0,
    k: int = DEFAULT_K,
    connect: str = "largest",
    affinity: str = "conditional",
    early_exaggeration: Optional[Tuple[float, int]] = None,
    momentum: Optional[MomentumSchedule] = None,
) -> EmbedResult:
    candidates.require_rows(2)
    X = standardize(candidates, scale).objectives

    if method == "tsne":
        cfg = TsneConfig(
            perplexity=perplexity,
            dims=dims,
            iterations=iterations,
            learning_rate=learning_rate,
            momentum=momentum or MomentumSchedule(),
            seed=seed,
            early_exaggeration=early_exaggeration,
            affinity=affinity,
        )
        P = joint_affinities(pairwise_sq_distances(X), cfg.perplexity, mode=cfg.affinity)
        state = run_tsne(P, cfg)
        return EmbedResult("tsne", candidates.ids, state.Y, X, (), state.cost_trace, P)
    if method == "pca":
        return EmbedResult("pca", candidates.ids, pca_project(X, dims).projection, X)
    if method == "isomap":
        result = isomap(X, k, dims, connect)
        rows = np.flatnonzero(result.embedded_mask)
        skipped = tuple(candidates.ids[i] for i in result.unembedded)
        return EmbedResult(
            "isomap", tuple(candidates.ids[i] for i in rows), result.embedding, X[rows], skipped
        )
    raise ConfigError(f"unknown method '{method}' (choose from tsne, pca, isomap)")


def align_embedding(candidates: CandidateSet, embedding: Embedding) -> np.ndarray:
    """Row index in `candidates` of every embedded id.

    Embedded ids must all be candidates; a candidate may be missing only if the
    embedding lists it as unembedded.
    """
    index = {cid: i for i, cid in enumerate(candidates.ids)}
    present = set(embedding.ids)
    skipped = set(embedding.unembedded)
    unexpected = [cid for cid in embedding.ids if cid not in index]
    missing = [cid for cid in candidates.ids if cid not in present and cid not in skipped]
    if unexpected or missing:
        raise IdMismatch(missing, unexpected)
    return np.array([index[cid] for cid in embedding.ids], dtype=np.intp)


def score_embedding(
    candidates: CandidateSet,
    embedding: Embedding,
    clusters: int,
    scale: str = "zscore",
    k: Optional[int] = None,
    seed: int = 42,
    restarts: int = DEFAULT_RESTARTS,
    sweep: bool = False,
) -> QualityReport:
    rows = align_embedding(candidates, embedding)
    X = standardize(candidates, scale).objectives[rows]
    return build_quality_report(
        candidates.subset(rows), X, embedding.coords, clusters, k, seed, restarts,
        method=embedding.method, sweep=sweep,
    )


def pick(
    candidates: CandidateSet,
    embedding: Embedding,
    clusters: int,
    seed: int = 42,
    restarts: int = DEFAULT_RESTARTS,
) -> Tuple[CandidateSet, np.ndarray]:
    """Representatives (full candidate rows, cluster order) and the cluster labels."""
    rows = align_embedding(candidates, embedding)
    embedded = candidates.subset(rows)
    fit = kmeans(embedding.coords, clusters, seed, restarts)
    picks = pick_representatives(embedded, fit.labels, fit.centroids, embedding.coords)
    position = {cid: i for i, cid in enumerate(embedded.ids)}
    logger.info("picked %d representatives from %d clusters", len(picks), clusters)
    return embedded.subset([position[cid] for cid in picks]), fit.labels


def labels_for(ids: Sequence[str], labels: Dict[str, int]) -> np.ndarray:
    missing = [cid for cid in ids if cid not in labels]
    if missing:
        raise IdMismatch(missing, [])
    return np.array([labels[cid] for cid in ids], dtype=np.int64)


def unique_names(names: List[str]) -> List[str]:
    seen: Dict[str, int] = {}
    out = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        out.append(name if seen[name] == 1 else f"{name}#{seen[name]}")
    return out


def lookup_rows(candidates: CandidateSet, ids: Sequence[str]) -> np.ndarray:
    """Row of each id in `candidates`; every id must be present."""
    index = {cid: i for i, cid in enumerate(candidates.ids)}
    unexpected = [cid for cid in ids if cid not in index]
    if unexpected:
        raise IdMismatch([], unexpected)
    return np.array([index[cid] for cid in ids], dtype=np.intp)


def compare(
    candidates: CandidateSet,
    embeddings: Sequence[Tuple[str, Embedding]],
    scale: str = "zscore",
    k: Optional[int] = None,
    true_labels: Optional[Dict[str, int]] = None,
    clusters: Optional[int] = None,
    seed: int = 42,
    restarts: int = DEFAULT_RESTARTS,
) -> pd.DataFrame:
    """Side-by-side quality table of several maps of the same candidates."""
    X = standardize(candidates, scale).objectives
    names = unique_names([name for name, _ in embeddings])
    entries = {
        name: (emb.coords, align_embedding(candidates, emb))
        for name, (_, emb) in zip(names, embeddings)
    }
    truth = None if true_labels is None else labels_for(candidates.ids, true_labels)
    return compare_embeddings(X, entries, k, truth, clusters, seed, restarts)
