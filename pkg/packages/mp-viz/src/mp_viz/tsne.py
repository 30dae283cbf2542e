"""
MP-Viz t-SNE

Exact (dense, O(N^2) per iteration) t-SNE: Student-t output similarities,
KL cost, its closed-form gradient and the momentum gradient-descent loop.

The update is a descent step, Y <- Y - eta * grad + alpha(t) * (Y - Y_prev),
followed by re-centering to zero mean.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .affinity import AFFINITY_MODES, AffinityMatrix
from .atomic import atomic_write_text
from .dataset import FLOAT_FORMAT, pairwise_sq_distances
from .errors import ConfigError, DimensionMismatch, NonFiniteUpdate

logger = logging.getLogger(__name__)

EPS_Q = 1e-12
INIT_STD = 1e-2  # variance 1e-4

Observer = Callable[["EmbeddingState"], None]


@dataclass(frozen=True)
class MomentumSchedule:
    """Piecewise-constant alpha(t) as (first_iteration, value) steps."""

    steps: Tuple[Tuple[int, float], ...] = ((1, 0.5), (251, 0.8))

    def __post_init__(self) -> None:
        if not self.steps:
            raise ConfigError("momentum schedule needs at least one step")
        starts = [s for s, _ in self.steps]
        if starts != sorted(starts):
            raise ConfigError("momentum schedule steps must be sorted by iteration")
        for _, value in self.steps:
            if not 0.0 <= value < 1.0:
                raise ConfigError(f"momentum must lie in [0, 1), got {value}")

    @classmethod
    def constant(cls, value: float) -> "MomentumSchedule":
        return cls(((1, value),))

    def __call__(self, iteration: int) -> float:
        value = self.steps[0][1]
        for start, step_value in self.steps:
            if iteration >= start:
                value = step_value
        return value


@dataclass(frozen=True)
class TsneConfig:
    perplexity: Optional[float] = None
    dims: int = 2
    iterations: int = 1000
    learning_rate: float = 100.0
    momentum: MomentumSchedule = field(default_factory=MomentumSchedule)
    seed: int = 42
    early_exaggeration: Optional[Tuple[float, int]] = None
    affinity: str = "conditional"
    cost_every: int = 10

    def __post_init__(self) -> None:
        if self.dims not in (2, 3):
            raise ConfigError(f"t-SNE output dimension must be 2 or 3, got {self.dims}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.affinity not in AFFINITY_MODES:
            raise ConfigError(f"unknown affinity mode '{self.affinity}'")
        if self.early_exaggeration is not None:
            factor, duration = self.early_exaggeration
            if factor <= 0 or duration < 0:
                raise ConfigError(f"bad early exaggeration {self.early_exaggeration}")
        if self.cost_every < 1:
            raise ConfigError("cost_every must be >= 1")


@dataclass(frozen=True)
class EmbeddingState:
    Y: np.ndarray
    Y_prev: np.ndarray
    iteration: int = 0
    cost_trace: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        for name in ("Y", "Y_prev"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class QMatrix:
    q: np.ndarray
    unnorm: np.ndarray


def init_embedding(n: int, d: int, seed: int) -> EmbeddingState:
    if n < 2 or d not in (2, 3):
        raise ConfigError(f"cannot initialise a {n}×{d} embedding")
    Y = np.random.default_rng(seed).normal(0.0, INIT_STD, size=(n, d))
    return EmbeddingState(Y, Y)


def low_dim_affinities(Y: np.ndarray) -> QMatrix:
    unnorm = 1.0 / (1.0 + pairwise_sq_distances(Y).values)
    np.fill_diagonal(unnorm, 0.0)
    return QMatrix(unnorm / unnorm.sum(), unnorm)


def _p_values(P: Union[AffinityMatrix, np.ndarray]) -> np.ndarray:
    return P.p if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=np.float64)


def kl_cost(P: Union[AffinityMatrix, np.ndarray], Q: QMatrix) -> float:
    """KL(P || Q) over off-diagonal pairs; q is floored inside the log only."""
    p = _p_values(P)
    if p.shape != Q.q.shape:
        raise DimensionMismatch(Q.q.shape, p.shape)
    off = ~np.eye(p.shape[0], dtype=bool)
    pv = p[off]
    qv = np.maximum(Q.q[off], EPS_Q)
    live = pv > 0
    return float(np.sum(pv[live] * np.log(pv[live] / qv[live])))


def gradient(P: Union[AffinityMatrix, np.ndarray], Q: QMatrix, Y: np.ndarray) -> np.ndarray:
    """4 * sum_j (p_ij - q_ij)(y_i - y_j)(1 + |y_i - y_j|^2)^-1 for every i."""
    p = _p_values(P)
    Y = np.asarray(Y, dtype=np.float64)
    if p.shape != Q.q.shape:
        raise DimensionMismatch(Q.q.shape, p.shape)
    if Y.shape[0] != p.shape[0]:
        raise DimensionMismatch((p.shape[0], Y.shape[1]), Y.shape)
    pq = (p - Q.q) * Q.unnorm
    return 4.0 * (pq.sum(axis=1)[:, None] * Y - pq @ Y)


def step(
    state: EmbeddingState, grad: np.ndarray, learning_rate: float, momentum: float
) -> EmbeddingState:
    if grad.shape != state.Y.shape:
        raise DimensionMismatch(state.Y.shape, grad.shape)
    Y = state.Y - learning_rate * grad + momentum * (state.Y - state.Y_prev)
    Y = Y - Y.mean(axis=0)
    iteration = state.iteration + 1
    if not np.isfinite(Y).all():
        raise NonFiniteUpdate(iteration)
    return replace(state, Y=Y, Y_prev=state.Y, iteration=iteration)


def run_tsne(
    P: AffinityMatrix,
    cfg: TsneConfig,
    observer: Optional[Observer] = None,
    init: Optional[EmbeddingState] = None,
) -> EmbeddingState:
    n = P.n
    state = init if init is not None else init_embedding(n, cfg.dims, cfg.seed)
    if state.Y.shape[0] != n:
        raise DimensionMismatch((n, cfg.dims), state.Y.shape)

    p_plain = P.p
    p_boost, boost_until = p_plain, 0
    if cfg.early_exaggeration is not None:
        factor, boost_until = cfg.early_exaggeration
        p_boost = p_plain * factor

    initial = max(kl_cost(p_plain, low_dim_affinities(state.Y)), 0.0)
    trace = [(state.iteration, initial)]
    state = replace(state, cost_trace=tuple(trace))
    logger.info("t-SNE on %d points, %d iterations, initial KL %.5f", n, cfg.iterations, initial)
    if observer is not None:
        observer(state)

    for t in range(1, cfg.iterations + 1):
        Q = low_dim_affinities(state.Y)
        p_eff = p_boost if t <= boost_until else p_plain
        state = step(state, gradient(p_eff, Q, state.Y), cfg.learning_rate, cfg.momentum(t))
        if t % cfg.cost_every == 0 or t == cfg.iterations:
            cost = max(kl_cost(p_plain, low_dim_affinities(state.Y)), 0.0)
            trace.append((t, cost))
            state = replace(state, cost_trace=tuple(trace))
            logger.debug("iteration %d: KL %.6f", t, cost)
            if observer is not None:
                observer(state)

    final = trace[-1][1]
    if n > 2 and final >= initial:
        logger.warning("t-SNE cost did not decrease (%.5f -> %.5f)", initial, final)
    logger.info("t-SNE final KL %.5f after %d iterations", final, cfg.iterations)
    return state


def save_cost_trace(path: Union[str, Path], trace: Sequence[Tuple[int, float]]) -> Path:
    frame = pd.DataFrame(
        {"iteration": [t for t, _ in trace], "kl": [float(c) for _, c in trace]}
    )
    return atomic_write_text(
        path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    )
