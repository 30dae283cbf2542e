"""
MP-Viz Surrogate

Closed-form stand-in for an analytical switched-reluctance machine model.
Seven normalized design variables are evaluated at each operating point for
average torque, torque density, efficiency and torque ripple, plus one global
objective, the machine volume. Coefficients are fixed constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .dataset import OperatingPoint
from .errors import ConfigError

PARAM_NAMES = (
    "bore_diameter",
    "stack_length",
    "stator_pole_angle",
    "rotor_pole_angle",
    "current_density",
    "turn_on",
    "turn_off",
)
POINT_OBJECTIVES = ("torque", "torque_density", "efficiency", "ripple")
POINT_SENSES = ("max", "max", "max", "min")
GLOBAL_OBJECTIVES = ("volume",)
GLOBAL_SENSES = ("min",)

DEFAULT_OPERATING_POINTS = (
    OperatingPoint("A", 0.18, 2000.0, 3.0),
    OperatingPoint("B", 0.08, 5000.0, 2.0),
    OperatingPoint("C", 0.02, 10000.0, 1.0),
)
# Turn-on angle that maximizes torque at each default point.
OPTIMAL_TURN_ON = {"A": 0.3, "B": 0.5, "C": 0.7}

_D, _L, _TS, _TR, _J, _ON, _OFF = range(7)


@dataclass(frozen=True)
class DesignParams:
    """One design, every variable normalized to [0, 1]."""

    bore_diameter: float
    stack_length: float
    stator_pole_angle: float
    rotor_pole_angle: float
    current_density: float
    turn_on: float
    turn_off: float

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if not self.turn_on < self.turn_off:
            raise ConfigError(
                f"turn_on ({self.turn_on}) must precede turn_off ({self.turn_off})"
            )

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "DesignParams":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class ConstraintThresholds:
    """Design constraints checked after generation.

    Efficiency and ripple are tested at `point` (A when present, else the first
    operating point). The torque margin is opt-in: when set, every operating
    point must deliver at least margin × its rated torque. None disables a check.
    """

    efficiency_min: Optional[float] = 0.5
    ripple_max: Optional[float] = 0.8
    torque_margin: Optional[float] = None
    point: Optional[str] = None

    @classmethod
    def vacuous(cls) -> "ConstraintThresholds":
        return cls(efficiency_min=None, ripple_max=None, torque_margin=None)

    def resolve_point(self, labels: Sequence[str]) -> str:
        if not labels:
            raise ConfigError("constraints need at least one operating point")
        if self.point is not None:
            if self.point not in labels:
                raise ConfigError(f"constraint point '{self.point}' not among {list(labels)}")
            return self.point
        return "A" if "A" in labels else labels[0]


def _shape(x: np.ndarray) -> np.ndarray:
    return np.sin(math.pi * x)


def volume(params: np.ndarray) -> np.ndarray:
    p = np.atleast_2d(np.asarray(params, dtype=np.float64))
    return 0.2 + 0.8 * p[:, _D] ** 2 * p[:, _L]


def evaluate_batch(params: np.ndarray, op: OperatingPoint, turn_on_opt: float) -> np.ndarray:
    """N×4 block (torque, torque_density, efficiency, ripple) at one operating point."""
    p = np.atleast_2d(np.asarray(params, dtype=np.float64))
    omega = op.speed / 10000.0
    current = op.current / 3.0
    size = p[:, _D] ** 2 * p[:, _L]
    shape = 0.4 + 0.6 * _shape(p[:, _TS]) * _shape(p[:, _TR])
    commutation = 1.0 - 0.5 * (p[:, _ON] - turn_on_opt) ** 2

    torque = current * size * shape * commutation
    density = torque / volume(p)
    losses = 0.3 * p[:, _J] ** 2 + 0.8 * omega ** 1.5 * size + 0.1 * (1.0 - p[:, _J])
    efficiency = 1.0 / (1.0 + losses)
    ripple = (
        0.15
        + 0.5 * np.abs(p[:, _OFF] - p[:, _ON] - 0.35)
        + 0.35 * (1.0 - _shape(p[:, _TR]))
    )
    return np.column_stack([torque, density, efficiency, ripple])


def evaluate_surrogate(
    p: DesignParams, op: OperatingPoint, turn_on_opt: Optional[float] = None
) -> Dict[str, float]:
    if turn_on_opt is None:
        if op.label not in OPTIMAL_TURN_ON:
            raise ConfigError(f"no optimal turn-on angle known for operating point '{op.label}'")
        turn_on_opt = OPTIMAL_TURN_ON[op.label]
    row = evaluate_batch(p.as_array(), op, turn_on_opt)[0]
    return dict(zip(POINT_OBJECTIVES, (float(v) for v in row)))


@dataclass(frozen=True)
class SurrogateProblem:
    operating_points: Tuple[OperatingPoint, ...] = DEFAULT_OPERATING_POINTS
    turn_on_opt: Mapping[str, float] = field(default_factory=lambda: dict(OPTIMAL_TURN_ON))
    thresholds: ConstraintThresholds = field(default_factory=ConstraintThresholds)

    def __post_init__(self) -> None:
        if not self.operating_points:
            raise ConfigError("a surrogate problem needs at least one operating point")
        labels = [op.label for op in self.operating_points]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"operating point labels must be unique, got {labels}")
        for label in labels:
            if label not in self.turn_on_opt:
                raise ConfigError(f"no optimal turn-on angle for operating point '{label}'")

    @classmethod
    def single_point(cls, label: str, **kwargs) -> "SurrogateProblem":
        by_label = {op.label: op for op in DEFAULT_OPERATING_POINTS}
        if label not in by_label:
            raise ConfigError(f"unknown operating point '{label}' (choose from A, B, C)")
        return cls(operating_points=(by_label[label],), **kwargs)

    @property
    def n_params(self) -> int:
        return len(PARAM_NAMES)

    @property
    def n_objectives(self) -> int:
        return len(POINT_OBJECTIVES) * len(self.operating_points) + len(GLOBAL_OBJECTIVES)

    def column_names(self) -> List[str]:
        names = [f"{op.label}.{obj}" for op in self.operating_points for obj in POINT_OBJECTIVES]
        return names + list(GLOBAL_OBJECTIVES)

    def senses(self) -> List[str]:
        return list(POINT_SENSES) * len(self.operating_points) + list(GLOBAL_SENSES)

    def evaluate(self, params: np.ndarray) -> np.ndarray:
        """N×(4M+1) objective matrix in column_names() order."""
        p = np.atleast_2d(np.asarray(params, dtype=np.float64))
        blocks = [
            evaluate_batch(p, op, self.turn_on_opt[op.label]) for op in self.operating_points
        ]
        blocks.append(volume(p)[:, None])
        return np.hstack(blocks)
