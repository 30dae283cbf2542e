"""
MP-Viz Synthetic Benchmarks

Known-structure data sets for checking the embedding methods: Gaussian blobs,
a swiss roll with its flat (arc length, height) chart, and a composite of the
roll plus three blobs.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from .dataset import CandidateSet
from .errors import ConfigError

ROLL_T_MIN = 1.5 * np.pi
ROLL_T_MAX = 4.5 * np.pi


def _split(n: int, parts: int) -> list:
    return [n // parts + (1 if i < n % parts else 0) for i in range(parts)]


def make_blobs(
    n: int,
    dim: int,
    n_centers: int = 3,
    sigma: float = 0.05,
    separation: float = 1.0,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussian blobs, rows grouped by blob.

    Centre c is `separation` times the sum of unit axes j with j % n_centers == c,
    so every column separates one blob from the rest.
    """
    if n_centers < 1 or dim < n_centers:
        raise ConfigError(f"need 1 <= n_centers <= dim, got {n_centers} centres in {dim}-D")
    if n < n_centers:
        raise ConfigError(f"need at least one point per blob, got n={n}")
    rng = np.random.default_rng(seed)
    centers = np.zeros((n_centers, dim))
    for j in range(dim):
        centers[j % n_centers, j] = separation
    sizes = _split(n, n_centers)
    labels = np.repeat(np.arange(n_centers), sizes)
    X = centers[labels] + rng.normal(0.0, sigma, size=(n, dim))
    return X, labels


def roll_arc_length(t: np.ndarray) -> np.ndarray:
    """Arc length of the spiral (t cos t, t sin t) from t = 0."""
    t = np.asarray(t, dtype=np.float64)
    return 0.5 * (t * np.sqrt(1.0 + t * t) + np.arcsinh(t))


def make_swiss_roll(n: int, height: float = 10.0, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """(points N×3, chart N×2) with t uniform on [1.5π, 4.5π]."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(ROLL_T_MIN, ROLL_T_MAX, size=n)
    h = rng.uniform(0.0, height, size=n)
    X = np.column_stack([t * np.cos(t), h, t * np.sin(t)])
    chart = np.column_stack([roll_arc_length(t), h])
    return X, chart


def make_composite(
    n_roll: int = 280,
    n_blob: int = 40,
    seed: int = 0,
    height: float = 10.0,
    offset: float = 8.0,
    sigma: float = 0.5,
) -> Tuple[np.ndarray, np.ndarray]:
    """Swiss roll (label 0) plus three blobs (labels 1-3) in six dimensions.

    The blobs sit on the roll axis at mid height and are pushed `offset` out
    along extra dimensions 3, 4 and 5 respectively.
    """
    rng = np.random.default_rng(seed)
    roll, _ = make_swiss_roll(n_roll, height, seed=int(rng.integers(2**31)))
    parts = [np.hstack([roll, np.zeros((n_roll, 3))])]
    labels = [np.zeros(n_roll, dtype=np.int64)]
    for b in range(3):
        center = np.zeros(6)
        center[1] = height / 2.0
        center[3 + b] = offset
        parts.append(center + rng.normal(0.0, sigma, size=(n_blob, 6)))
        labels.append(np.full(n_blob, b + 1, dtype=np.int64))
    return np.vstack(parts), np.concatenate(labels)


def as_candidate_set(
    X: np.ndarray, prefix: str = "p", column_names: Optional[Sequence[str]] = None
) -> CandidateSet:
    X = np.asarray(X, dtype=np.float64)
    names = tuple(column_names) if column_names else tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return CandidateSet(
        ids=tuple(f"{prefix}{i:04d}" for i in range(X.shape[0])),
        objectives=X,
        column_names=names,
    )
