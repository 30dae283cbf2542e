"""
MP-Viz Errors

Every failure the toolkit raises derives from MpVizError and carries the exit
code the CLI reports: 1 for bad input, 2 for numeric failures, 3 for I/O.
"""

from __future__ import annotations

from typing import Optional, Sequence


class MpVizError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class InputError(MpVizError):
    """The input files or parameters are malformed."""

    exit_code = 1


class NumericError(MpVizError):
    """A numeric routine cannot produce a valid result."""

    exit_code = 2


class OutputError(MpVizError):
    """An output file could not be written."""

    exit_code = 3

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"cannot write {path}: {reason}")


class MissingColumn(InputError):
    def __init__(self, column: str, path: Optional[str] = None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing column '{column}'{where}")


class DuplicateId(InputError):
    def __init__(self, candidate_id: str, row: int):
        self.candidate_id = candidate_id
        self.row = row
        super().__init__(f"duplicate id '{candidate_id}' at row {row}")


class NonNumericCell(InputError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric cell at row {row}, column '{column}': {value!r}")


class NonFiniteCell(InputError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-finite cell at row {row}, column '{column}': {value!r}")


class MetadataError(InputError):
    """Sidecar metadata is missing, malformed or inconsistent with the table."""


class ConfigError(InputError):
    """A parameter or config file value is invalid."""


class IdMismatch(InputError):
    def __init__(self, missing: Sequence[str], unexpected: Sequence[str]):
        self.missing = list(missing)
        self.unexpected = list(unexpected)
        parts = []
        if self.missing:
            parts.append(f"{len(self.missing)} missing (first: {self.missing[0]})")
        if self.unexpected:
            parts.append(f"{len(self.unexpected)} unexpected (first: {self.unexpected[0]})")
        super().__init__("embedding ids do not match candidates: " + ", ".join(parts))


class NotTwoDimensional(InputError):
    def __init__(self, dims: int):
        self.dims = dims
        super().__init__(f"plot needs a 2-D embedding, got {dims} dimensions")


class ZeroVarianceColumn(NumericError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column '{column}' is constant; zscore is undefined")


class DegenerateRow(NumericError):
    def __init__(self, index: int, reason: str):
        self.index = index
        super().__init__(f"point {index}: {reason}")


class PerplexityOutOfRange(NumericError):
    def __init__(self, perplexity: float, n: int, index: Optional[int] = None):
        self.perplexity = perplexity
        self.n = n
        self.index = index
        where = f"point {index}: " if index is not None else ""
        super().__init__(
            f"{where}perplexity {perplexity:g} outside (1, {n - 1}] for {n} points"
        )


class DimensionMismatch(NumericError):
    def __init__(self, expected: tuple, got: tuple):
        self.expected = expected
        self.got = got
        super().__init__(f"shape mismatch: expected {expected}, got {got}")


class NonFiniteUpdate(NumericError):
    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(
            f"non-finite coordinates at iteration {iteration}; lower the learning rate"
        )


class RankDeficient(NumericError):
    def __init__(self, requested: int, rank: int):
        self.requested = requested
        self.rank = rank
        super().__init__(f"requested {requested} components but covariance rank is {rank}")


class DisconnectedGraph(NumericError):
    def __init__(self, components: Sequence[Sequence[int]]):
        self.components = [list(c) for c in components]
        sizes = ", ".join(str(len(c)) for c in self.components)
        super().__init__(
            f"neighbor graph has {len(self.components)} components (sizes {sizes}); "
            "increase k or use --connect mst/largest"
        )


class KTooLarge(NumericError):
    def __init__(self, k: int, n: int, bound: str):
        self.k = k
        self.n = n
        super().__init__(f"k={k} too large for {n} points (need {bound})")


class SingleCluster(NumericError):
    def __init__(self) -> None:
        super().__init__("silhouette needs at least two clusters")


class EmptyClusterRepaired(UserWarning):
    """k-means emptied a cluster and reseeded it with the farthest point."""
