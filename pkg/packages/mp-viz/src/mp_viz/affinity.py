"""
MP-Viz Affinity

High-dimensional joint probabilities for t-SNE. Each point gets its own
Gaussian bandwidth, found by binary search so that the conditional row hits
the requested perplexity; rows are then symmetrized into one joint matrix.
A single shared bandwidth is available as `mode="shared"`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .atomic import atomic_write_text
from .dataset import FLOAT_FORMAT, DistanceMatrix
from .errors import ConfigError, DegenerateRow, PerplexityOutOfRange

logger = logging.getLogger(__name__)

EPS_P = 1e-12
DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITER = 50
AFFINITY_MODES = ("conditional", "shared")


@dataclass(frozen=True)
class ConditionalRow:
    """P_i over the other points; entropy in bits."""

    probs: np.ndarray
    entropy: float

    @property
    def perplexity(self) -> float:
        return float(2.0 ** self.entropy)


@dataclass(frozen=True)
class AffinityMatrix:
    p: np.ndarray
    perplexity: float
    betas: np.ndarray
    mode: str = "conditional"

    def __post_init__(self) -> None:
        for name in ("p", "betas"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def sigmas(self) -> np.ndarray:
        return np.sqrt(1.0 / (2.0 * self.betas))


def default_perplexity(n: int) -> float:
    """min(30, (n-1)/3), raised so tiny sets still have a valid target."""
    return max(min(30.0, (n - 1) / 3.0), min(1.5, n - 1.0))


def conditional_row(dist_row: np.ndarray, self_index: int, beta: float) -> ConditionalRow:
    d = np.asarray(dist_row, dtype=np.float64)
    if not beta > 0 or not math.isfinite(beta):
        raise DegenerateRow(self_index, f"beta must be a positive finite number, got {beta}")
    mask = np.ones(d.shape[0], dtype=bool)
    mask[self_index] = False
    others = d[mask]
    if others.size == 0 or np.isnan(others).any() or not np.isfinite(others).any():
        raise DegenerateRow(self_index, "no finite distances to other points")

    shifted = others - others[np.isfinite(others)].min()
    weights = np.exp(-beta * shifted)
    probs_o = weights / weights.sum()
    nz = probs_o > 0
    entropy = float(-np.sum(probs_o[nz] * np.log2(probs_o[nz])))

    probs = np.zeros_like(d)
    probs[mask] = probs_o
    probs.setflags(write=False)
    return ConditionalRow(probs, max(entropy, 0.0))


def _row_scale(dist_row: np.ndarray, self_index: int) -> float:
    """Mean positive shifted distance; 0 when all other points are equidistant."""
    others = np.delete(np.asarray(dist_row, dtype=np.float64), self_index)
    finite = others[np.isfinite(others)]
    if finite.size == 0:
        return 0.0
    shifted = finite - finite.min()
    positive = shifted[shifted > 0]
    return float(positive.mean()) if positive.size else 0.0


def search_beta(
    dist_row: np.ndarray,
    self_index: int,
    target_perplexity: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[float, ConditionalRow]:
    """Find beta so that 2^H of the conditional row matches the target.

    The search runs in units of the row's mean positive distance, starting at
    beta = 1, doubling or halving until the target is bracketed and bisecting
    after that. When max_iter runs out, the best beta seen is returned.
    """
    d = np.asarray(dist_row, dtype=np.float64)
    n = d.shape[0]
    if not (1.0 < target_perplexity <= n - 1):
        raise PerplexityOutOfRange(target_perplexity, n, self_index)
    if tol <= 0:
        raise ConfigError(f"tol must be positive, got {tol}")

    scale = _row_scale(d, self_index)
    if scale == 0.0:
        # every other point is equally far: the row is uniform for any beta
        return 1.0, conditional_row(d, self_index, 1.0)
    scaled = d / scale

    beta, lo, hi = 1.0, 0.0, math.inf
    best_beta, best_row, best_gap = beta, None, math.inf
    for _ in range(max_iter):
        row = conditional_row(scaled, self_index, beta)
        gap = row.perplexity - target_perplexity
        if abs(gap) < best_gap:
            best_beta, best_row, best_gap = beta, row, abs(gap)
        if abs(gap) <= tol:
            break
        if gap > 0:
            lo = beta
            beta = beta * 2.0 if math.isinf(hi) else 0.5 * (beta + hi)
        else:
            hi = beta
            beta = beta * 0.5 if lo == 0.0 else 0.5 * (beta + lo)
    else:
        logger.debug(
            "point %d: perplexity search stopped after %d steps, off by %.3g",
            self_index, max_iter, best_gap,
        )
    assert best_row is not None
    return best_beta / scale, best_row


def _symmetrize(conditional: np.ndarray) -> np.ndarray:
    n = conditional.shape[0]
    p = conditional + conditional.T
    np.fill_diagonal(p, 0.0)
    p = p / p.sum()
    # mix in a uniform floor: every off-diagonal entry >= EPS_P, total still 1
    m = n * (n - 1)
    p = EPS_P + (1.0 - m * EPS_P) * p
    np.fill_diagonal(p, 0.0)
    return p


def _shared_entropies(scaled: np.ndarray, beta: float) -> np.ndarray:
    n = scaled.shape[0]
    off = ~np.eye(n, dtype=bool)
    masked = np.where(off, scaled, np.inf)
    shifted = masked - masked.min(axis=1, keepdims=True)
    weights = np.exp(-beta * shifted)
    probs = weights / weights.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log2(probs), 0.0)
    return -terms.sum(axis=1)


def _shared_affinities(
    values: np.ndarray, perplexity: float, tol: float, max_iter: int
) -> Tuple[np.ndarray, float]:
    n = values.shape[0]
    off = ~np.eye(n, dtype=bool)
    positive = values[off][values[off] > 0]
    if positive.size == 0:
        p = np.where(off, 1.0, 0.0)
        return p / p.sum(), 1.0
    scale = float(positive.mean())
    scaled = values / scale

    beta, lo, hi = 1.0, 0.0, math.inf
    best_beta, best_gap = beta, math.inf
    for _ in range(max_iter):
        gap = 2.0 ** float(_shared_entropies(scaled, beta).mean()) - perplexity
        if abs(gap) < best_gap:
            best_beta, best_gap = beta, abs(gap)
        if abs(gap) <= tol:
            break
        if gap > 0:
            lo = beta
            beta = beta * 2.0 if math.isinf(hi) else 0.5 * (beta + hi)
        else:
            hi = beta
            beta = beta * 0.5 if lo == 0.0 else 0.5 * (beta + lo)

    shifted = scaled - scaled[off].min()
    weights = np.where(off, np.exp(-best_beta * shifted), 0.0)
    return weights / weights.sum(), best_beta / scale


def joint_affinities(
    dist: DistanceMatrix,
    perplexity: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    mode: str = "conditional",
) -> AffinityMatrix:
    """Symmetric joint probabilities p_ij summing to one."""
    if mode not in AFFINITY_MODES:
        raise ConfigError(f"unknown affinity mode '{mode}' (choose from {', '.join(AFFINITY_MODES)})")
    values = dist.values
    n = dist.n
    if perplexity is None:
        perplexity = default_perplexity(n)

    if n == 2:
        p = np.array([[0.0, 0.5], [0.5, 0.0]])
        return AffinityMatrix(p, perplexity, np.ones(2), mode)
    if not (1.0 < perplexity <= n - 1):
        raise PerplexityOutOfRange(perplexity, n)

    if mode == "shared":
        p_raw, beta = _shared_affinities(values, perplexity, tol, max_iter)
        p = _symmetrize(p_raw * n)
        logger.info("shared bandwidth: beta=%.4g (perplexity %.3g, N=%d)", beta, perplexity, n)
        return AffinityMatrix(p, perplexity, np.full(n, beta), mode)

    conditional = np.zeros((n, n), dtype=np.float64)
    betas = np.empty(n, dtype=np.float64)
    for i in range(n):
        betas[i], row = search_beta(values[i], i, perplexity, tol, max_iter)
        conditional[i] = row.probs
    p = _symmetrize(conditional)
    sigmas = np.sqrt(1.0 / (2.0 * betas))
    logger.info(
        "perplexity %.3g over %d points: sigma mean %.4g (min %.4g, max %.4g)",
        perplexity, n, sigmas.mean(), sigmas.min(), sigmas.max(),
    )
    return AffinityMatrix(p, perplexity, betas, mode)


def save_betas(path: Union[str, Path], affinity: AffinityMatrix, ids: Sequence[str]) -> Path:
    """Debug dump of the per-point bandwidths."""
    frame = pd.DataFrame({"id": list(ids), "beta": affinity.betas, "sigma": affinity.sigmas})
    return atomic_write_text(
        path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    )
