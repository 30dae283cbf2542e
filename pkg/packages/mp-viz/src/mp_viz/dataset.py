"""
MP-Viz Dataset

Candidate tables (MP-CSV v1), the `.meta` sidecar that declares column roles,
objective standardization and the squared-distance matrix shared by every
embedding method.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from . import config
from .atomic import atomic_write_bytes, atomic_write_text
from .config import RunConfig, read_key_values, split_list
from .errors import (
    ConfigError,
    DuplicateId,
    InputError,
    MetadataError,
    MissingColumn,
    NonFiniteCell,
    NonNumericCell,
    ZeroVarianceColumn,
)
from .provenance import sidecar_path, write_sidecar
from .schema_guard import check_against

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FORMAT = "mp-csv-v1"
EMBEDDING_FORMAT = "mp-embedding-v1"
FLOAT_FORMAT = "%.17g"
SENSES = ("min", "max")


def _readonly(values: Any, dtype: Any = np.float64, ndim: int = 2) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim == 2 and arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class OperatingPoint:
    """A (torque, speed, current) condition; torque in N·m, speed in rpm, current in A."""

    label: str
    torque: float
    speed: float
    current: float

    def __post_init__(self) -> None:
        for name in ("torque", "speed", "current"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"operating point {self.label}: {name} must be > 0, got {value}")
            object.__setattr__(self, name, value)

    def encode(self) -> str:
        return f"{self.label}:{self.torque!r}:{self.speed!r}:{self.current!r}"

    @classmethod
    def parse(cls, text: str) -> "OperatingPoint":
        parts = text.split(":")
        if len(parts) != 4:
            raise MetadataError(f"operating point '{text}': expected label:torque:speed:current")
        label, *numbers = parts
        try:
            torque, speed, current = (float(x) for x in numbers)
        except ValueError:
            raise MetadataError(f"operating point '{text}': non-numeric value") from None
        return cls(label.strip(), torque, speed, current)


def encode_operating_points(points: Sequence[OperatingPoint]) -> str:
    return ";".join(op.encode() for op in points)


def parse_operating_points(text: str) -> Tuple[OperatingPoint, ...]:
    return tuple(OperatingPoint.parse(chunk) for chunk in text.split(";") if chunk.strip())


@dataclass(frozen=True)
class ColumnSchema:
    """Column roles of a candidate table, as declared by the sidecar."""

    id_column: str = "id"
    param_columns: Tuple[str, ...] = ()
    objective_columns: Optional[Tuple[str, ...]] = None
    senses: Optional[Tuple[str, ...]] = None
    feasible_column: Optional[str] = None
    operating_points: Tuple[OperatingPoint, ...] = ()
    objectives_per_point: int = 0
    global_objectives: Optional[int] = None

    @classmethod
    def from_meta(cls, meta: Dict[str, str], source: str = "<meta>") -> "ColumnSchema":
        check_against(meta, "candidates-meta.schema.json", source)
        objective_columns = tuple(split_list(meta["objective_columns"]))
        senses = tuple(split_list(meta["senses"])) if meta.get("senses") else None
        global_objectives = meta.get("global_objectives")
        return cls(
            id_column=meta.get("id_column", "id"),
            param_columns=tuple(split_list(meta.get("param_columns", ""))),
            objective_columns=objective_columns,
            senses=senses,
            feasible_column=meta.get("feasible_column") or None,
            operating_points=parse_operating_points(meta.get("operating_points", "")),
            objectives_per_point=int(meta.get("objectives_per_point", "0")),
            global_objectives=int(global_objectives) if global_objectives is not None else None,
        )

    def meta_pairs(self) -> List[Tuple[str, Any]]:
        pairs: List[Tuple[str, Any]] = [
            ("format", FORMAT),
            ("id_column", self.id_column),
            ("param_columns", list(self.param_columns)),
            ("objective_columns", list(self.objective_columns or ())),
            ("senses", list(self.senses or ())),
        ]
        if self.feasible_column:
            pairs.append(("feasible_column", self.feasible_column))
        pairs.append(("operating_points", encode_operating_points(self.operating_points)))
        pairs.append(("objectives_per_point", self.objectives_per_point))
        if self.global_objectives is not None:
            pairs.append(("global_objectives", self.global_objectives))
        return pairs


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """N design candidates with parameters, objectives and feasibility flags.

    Objective columns are laid out point by point (M blocks of D_op columns)
    followed by D_global global columns. Arrays are read-only copies.
    """

    ids: Tuple[str, ...]
    objectives: np.ndarray
    column_names: Tuple[str, ...]
    params: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    param_names: Tuple[str, ...] = ()
    senses: Tuple[str, ...] = ()
    operating_points: Tuple[OperatingPoint, ...] = ()
    objectives_per_point: int = 0
    global_objectives: Optional[int] = None
    feasible: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        ids = tuple(str(i) for i in self.ids)
        n = len(ids)
        objectives = _readonly(self.objectives)
        if objectives.shape == (0, 0):
            objectives = _readonly(np.empty((n, 0)))
        if objectives.ndim != 2 or objectives.shape[0] != n:
            raise MetadataError(f"objectives must be {n}×K, got shape {objectives.shape}")
        names = tuple(self.column_names)
        if len(names) != objectives.shape[1]:
            raise MetadataError(
                f"{len(names)} column names for {objectives.shape[1]} objective columns"
            )
        if not np.isfinite(objectives).all():
            row, col = np.argwhere(~np.isfinite(objectives))[0]
            raise NonFiniteCell(int(row) + 1, names[col], repr(objectives[row, col]))

        params = _readonly(self.params)
        if params.size == 0 and not self.param_names:
            params = _readonly(np.empty((n, 0)))
        if params.shape != (n, len(self.param_names)):
            raise MetadataError(
                f"params must be {n}×{len(self.param_names)}, got shape {params.shape}"
            )

        senses = tuple(self.senses) if self.senses else ("min",) * len(names)
        if len(senses) != len(names) or any(s not in SENSES for s in senses):
            raise MetadataError(f"senses must list min/max for each of {len(names)} columns")

        m = len(self.operating_points)
        d_global = self.global_objectives
        if d_global is None:
            d_global = len(names) - m * self.objectives_per_point
        if d_global < 0 or m * self.objectives_per_point + d_global != len(names):
            raise MetadataError(
                f"{len(names)} objective columns but metadata declares "
                f"{m}×{self.objectives_per_point} + {d_global}"
            )

        feasible = self.feasible
        feasible = np.ones(n, dtype=bool) if feasible is None else np.asarray(feasible, dtype=bool)
        if feasible.shape != (n,):
            raise MetadataError(f"feasible flags must have length {n}")

        seen: Dict[str, int] = {}
        for row, cid in enumerate(ids, start=1):
            if cid in seen:
                raise DuplicateId(cid, row)
            seen[cid] = row

        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "objectives", objectives)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "param_names", tuple(self.param_names))
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "operating_points", tuple(self.operating_points))
        object.__setattr__(self, "global_objectives", d_global)
        object.__setattr__(self, "feasible", _readonly(feasible, dtype=bool, ndim=1))

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CandidateSet):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.column_names == other.column_names
            and self.param_names == other.param_names
            and self.senses == other.senses
            and self.operating_points == other.operating_points
            and self.objectives_per_point == other.objectives_per_point
            and self.global_objectives == other.global_objectives
            and np.array_equal(self.objectives, other.objectives)
            and np.array_equal(self.params, other.params)
            and np.array_equal(self.feasible, other.feasible)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n(self) -> int:
        return len(self.ids)

    def column(self, name: str) -> np.ndarray:
        if name in self.column_names:
            return self.objectives[:, self.column_names.index(name)]
        if name in self.param_names:
            return self.params[:, self.param_names.index(name)]
        raise MissingColumn(name)

    def schema(self) -> ColumnSchema:
        return ColumnSchema(
            param_columns=self.param_names,
            objective_columns=self.column_names,
            senses=self.senses,
            feasible_column="feasible",
            operating_points=self.operating_points,
            objectives_per_point=self.objectives_per_point,
            global_objectives=self.global_objectives,
        )

    def subset(self, selector: Union[Sequence[int], np.ndarray]) -> "CandidateSet":
        """Rows picked by an index list or a boolean mask, in that order."""
        sel = np.asarray(selector)
        if sel.dtype == bool:
            if sel.shape != (self.n,):
                raise MetadataError(f"mask must have length {self.n}")
            idx = np.flatnonzero(sel)
        else:
            idx = sel.astype(np.intp).reshape(-1)
        return replace(
            self,
            ids=tuple(self.ids[i] for i in idx),
            objectives=self.objectives[idx],
            params=self.params[idx],
            feasible=self.feasible[idx],
        )

    def feasible_only(self) -> "CandidateSet":
        return self.subset(self.feasible)

    def with_objectives(self, objectives: np.ndarray) -> "CandidateSet":
        return replace(self, objectives=objectives)

    def require_rows(self, minimum: int = 2) -> "CandidateSet":
        if self.n < minimum:
            raise InputError(f"need at least {minimum} candidates, got {self.n}")
        return self


@dataclass(frozen=True)
class DistanceMatrix:
    """Squared Euclidean (or squared geodesic) distances."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = _readonly(self.values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise MetadataError(f"distance matrix must be square, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Embedding:
    """Low-dimensional coordinates keyed by candidate id."""

    ids: Tuple[str, ...]
    coords: np.ndarray
    method: Optional[str] = None
    unembedded: Tuple[str, ...] = ()

    @property
    def dims(self) -> int:
        return int(self.coords.shape[1])


# -- ingestion -----------------------------------------------------------------


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise InputError(f"{path}: file not found")
    try:
        if path.suffix == ".parquet":
            frame = pd.read_parquet(path)
            return frame.astype(str)
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise InputError(f"{path}: no header row") from None
    except pd.errors.ParserError as e:
        raise InputError(f"{path}: {e}") from None


def _numeric_block(frame: pd.DataFrame, columns: Sequence[str]) -> np.ndarray:
    """Parse cells to float64; rows are reported 1-based over data rows."""
    out = np.empty((len(frame), len(columns)), dtype=np.float64)
    for j, col in enumerate(columns):
        for i, cell in enumerate(frame[col].tolist()):
            try:
                value = float(cell)
            except (TypeError, ValueError):
                raise NonNumericCell(i + 1, col, str(cell)) from None
            if not math.isfinite(value):
                raise NonFiniteCell(i + 1, col, str(cell))
            out[i, j] = value
    return out


def _flag_block(frame: pd.DataFrame, column: str) -> np.ndarray:
    flags = np.empty(len(frame), dtype=bool)
    for i, cell in enumerate(frame[column].tolist()):
        text = str(cell).strip().lower()
        if text in ("1", "true", "1.0"):
            flags[i] = True
        elif text in ("0", "false", "0.0"):
            flags[i] = False
        else:
            raise NonNumericCell(i + 1, column, str(cell))
    return flags


def read_schema(path: PathLike) -> Optional[ColumnSchema]:
    """Column roles from `<path>.meta`, or None when there is no sidecar."""
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        return None
    return ColumnSchema.from_meta(read_key_values(meta_path), source=meta_path.name)


def load_candidates(path: PathLike, schema: Optional[ColumnSchema] = None) -> CandidateSet:
    """Load a candidate table (.csv or .parquet) with its column roles.

    Without an explicit schema the sidecar is used; without a sidecar every
    non-id column is a minimized objective.
    """
    path = Path(path)
    if schema is None:
        schema = read_schema(path) or ColumnSchema()
    frame = _read_frame(path)

    if len(frame) > config.MAX_CANDIDATES:
        raise InputError(
            f"{path.name}: {len(frame)} rows exceeds MP_MAX_CANDIDATES={config.MAX_CANDIDATES}"
        )
    if schema.id_column not in frame.columns:
        raise MissingColumn(schema.id_column, path.name)

    objective_columns = schema.objective_columns
    if objective_columns is None:
        reserved = {schema.id_column, *schema.param_columns, schema.feasible_column}
        objective_columns = tuple(c for c in frame.columns if c not in reserved)
    for col in (*schema.param_columns, *objective_columns):
        if col not in frame.columns:
            raise MissingColumn(col, path.name)
    if schema.feasible_column and schema.feasible_column not in frame.columns:
        raise MissingColumn(schema.feasible_column, path.name)

    ids = [str(v) for v in frame[schema.id_column].tolist()]
    seen: Dict[str, int] = {}
    for row, cid in enumerate(ids, start=1):
        if cid in seen:
            raise DuplicateId(cid, row)
        seen[cid] = row

    candidates = CandidateSet(
        ids=tuple(ids),
        objectives=_numeric_block(frame, objective_columns),
        column_names=tuple(objective_columns),
        params=_numeric_block(frame, schema.param_columns),
        param_names=schema.param_columns,
        senses=schema.senses or (),
        operating_points=schema.operating_points,
        objectives_per_point=schema.objectives_per_point,
        global_objectives=schema.global_objectives,
        feasible=_flag_block(frame, schema.feasible_column) if schema.feasible_column else None,
    )
    candidates.require_rows(2)
    logger.info(
        "loaded %d candidates × %d objectives from %s",
        candidates.n, len(candidates.column_names), path.name,
    )
    return candidates


def candidates_frame(candidates: CandidateSet) -> pd.DataFrame:
    data: Dict[str, Any] = {"id": list(candidates.ids)}
    for j, name in enumerate(candidates.param_names):
        data[name] = candidates.params[:, j]
    for j, name in enumerate(candidates.column_names):
        data[name] = candidates.objectives[:, j]
    data["feasible"] = ["true" if f else "false" for f in candidates.feasible]
    return pd.DataFrame(data, columns=list(data))


def save_candidates(
    candidates: CandidateSet, path: PathLike, run: Optional[RunConfig] = None
) -> Path:
    """Write the table (CSV with 17 significant digits, or Parquet) plus its sidecar."""
    path = Path(path)
    frame = candidates_frame(candidates)
    if path.suffix == ".parquet":
        buf = io.BytesIO()
        frame.to_parquet(buf, index=False)
        atomic_write_bytes(path, buf.getvalue())
    else:
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        atomic_write_text(path, text)
    write_sidecar(path, candidates.schema().meta_pairs(), run)
    return path


# -- transforms ----------------------------------------------------------------


def standardize_matrix(
    X: np.ndarray, mode: str = "zscore", names: Optional[Sequence[str]] = None
) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if mode == "none":
        return X.copy()
    if mode == "zscore":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        for j in range(X.shape[1]):
            if std[j] <= 1e-12 * max(1.0, abs(mean[j])):
                raise ZeroVarianceColumn(names[j] if names else f"#{j}")
        return (X - mean) / std
    if mode == "minmax":
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        out = np.zeros_like(X)
        live = span > 0
        out[:, live] = (X[:, live] - lo[live]) / span[live]
        return out
    raise ConfigError(f"unknown scale mode '{mode}' (choose from {', '.join(config.SCALE_MODES)})")


def standardize(candidates: CandidateSet, mode: str = "zscore") -> CandidateSet:
    """Rescale objective columns; parameters are left alone."""
    if mode == "none":
        return candidates
    scaled = standardize_matrix(candidates.objectives, mode, candidates.column_names)
    return candidates.with_objectives(scaled)


def pairwise_sq_distances(matrix: np.ndarray) -> DistanceMatrix:
    """values[i, j] = sum_k (x_ik - x_jk)^2, accumulated in column order.

    Accumulating per column keeps the summation order of a naive loop, so the
    result is exactly symmetric with an exactly zero diagonal.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2:
        raise MetadataError(f"expected an N×K matrix, got shape {X.shape}")
    n, k = X.shape
    values = np.zeros((n, n), dtype=np.float64)
    for col in range(k):
        diff = X[:, col, None] - X[None, :, col]
        values += diff * diff
    return DistanceMatrix(values)


# -- embeddings ----------------------------------------------------------------


def save_embedding(
    path: PathLike,
    ids: Sequence[str],
    coords: np.ndarray,
    method: Optional[str] = None,
    unembedded: Sequence[str] = (),
    run: Optional[RunConfig] = None,
) -> Path:
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[0] != len(ids):
        raise MetadataError(f"{len(ids)} ids for {coords.shape[0]} embedded rows")
    data: Dict[str, Any] = {"id": list(ids)}
    for j in range(coords.shape[1]):
        data[f"y{j + 1}"] = coords[:, j]
    text = pd.DataFrame(data).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    path = atomic_write_text(path, text)
    body: List[Tuple[str, Any]] = [("format", EMBEDDING_FORMAT), ("dims", coords.shape[1])]
    if method is not None:
        body.append(("method", method))
    body.append(("unembedded", list(unembedded)))
    write_sidecar(path, body, run)
    return path


def load_embedding(path: PathLike) -> Embedding:
    path = Path(path)
    frame = _read_frame(path)
    if "id" not in frame.columns:
        raise MissingColumn("id", path.name)
    coord_columns = [c for c in frame.columns if c != "id"]
    expected = [f"y{j + 1}" for j in range(len(coord_columns))]
    if not coord_columns or coord_columns != expected:
        raise MetadataError(f"{path.name}: expected columns id,y1..yd, got {list(frame.columns)}")
    ids = [str(v) for v in frame["id"].tolist()]
    seen: Dict[str, int] = {}
    for row, cid in enumerate(ids, start=1):
        if cid in seen:
            raise DuplicateId(cid, row)
        seen[cid] = row

    method = None
    unembedded: Tuple[str, ...] = ()
    meta_path = sidecar_path(path)
    if meta_path.exists():
        meta = read_key_values(meta_path)
        method = meta.get("method") or None
        unembedded = tuple(split_list(meta.get("unembedded", "")))
    coords = _numeric_block(frame, coord_columns)
    coords.setflags(write=False)
    return Embedding(tuple(ids), coords, method, unembedded)
