"""
MP-Viz Candidate Validator

Checks a candidate table and its sidecar before it is embedded: structural
problems are errors, things that will hurt an embedding are warnings.
"""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from . import config
from .dataset import CandidateSet, load_candidates, read_schema
from .errors import MpVizError
from .nsga2 import pareto_fraction
from .provenance import sidecar_path
from .surrogate import PARAM_NAMES


class CandidateValidator:
    """Validate an MP-CSV v1 candidate table against its sidecar."""

    def __init__(self, path: str, strict: bool = False):
        self.path = Path(path)
        self.strict = strict
        self.errors = []
        self.warnings = []
        self.candidates: Optional[CandidateSet] = None

    def error(self, msg: str):
        self.errors.append(msg)

    def warning(self, msg: str):
        self.warnings.append(msg)

    def validate_file(self) -> bool:
        if not self.path.exists():
            self.error(f"File not found: {self.path.name}")
            return False
        if self.path.suffix not in (".csv", ".parquet"):
            self.warning(f"Unexpected extension '{self.path.suffix}', reading as CSV")
        return True

    def validate_sidecar(self) -> bool:
        if not sidecar_path(self.path).exists():
            self.warning("No sidecar: every non-id column is treated as a minimized objective")
            return True
        try:
            read_schema(self.path)
        except MpVizError as e:
            self.error(f"Sidecar: {e}")
            return False
        return True

    def validate_table(self) -> bool:
        try:
            self.candidates = load_candidates(self.path)
        except MpVizError as e:
            self.error(str(e))
            return False
        return True

    def validate_content(self) -> bool:
        cs = self.candidates
        if cs is None:
            return False
        if cs.n < 4:
            self.warning(f"Only {cs.n} candidates; perplexity search has little room")
        if cs.n > config.MAX_CANDIDATES // 2:
            self.warning(f"{cs.n} candidates: dense O(N^2) embeddings will be slow")

        std = cs.objectives.std(axis=0)
        for name, s in zip(cs.column_names, std):
            if s == 0:
                msg = f"Objective column '{name}' is constant; zscore scaling will fail"
                if self.strict:
                    self.error(msg)
                else:
                    self.warning(msg)

        if cs.params.shape[1]:
            _, first = np.unique(cs.params, axis=0, return_index=True)
            dupes = cs.n - first.size
            if dupes:
                self.warning(f"{dupes} candidates repeat an earlier parameter vector")

        if cs.param_names == PARAM_NAMES:
            if ((cs.params < 0) | (cs.params > 1)).any():
                self.error("Design variables must lie in [0, 1]")
            bad = int(np.count_nonzero(cs.params[:, 5] >= cs.params[:, 6]))
            if bad:
                self.error(f"{bad} candidates have turn_on >= turn_off")

        if not cs.feasible.any():
            self.warning("No candidate is flagged feasible")
        return len(self.errors) == 0

    def validate_all(self) -> Tuple[bool, Dict[str, Any]]:
        """Run all validation checks and return results."""
        self.errors = []
        self.warnings = []

        file_ok = self.validate_file()
        sidecar_ok = self.validate_sidecar() if file_ok else False
        table_ok = self.validate_table() if sidecar_ok else False
        content_ok = self.validate_content() if table_ok else False

        is_valid = len(self.errors) == 0
        report: Dict[str, Any] = {
            "valid": is_valid,
            "strict": self.strict,
            "errors": self.errors,
            "warnings": self.warnings,
            "checks": {
                "file": file_ok,
                "sidecar": sidecar_ok,
                "table": table_ok,
                "content": content_ok,
            },
        }
        if self.candidates is not None:
            cs = self.candidates
            report["stats"] = {
                "candidates": cs.n,
                "objectives": len(cs.column_names),
                "operating_points": [op.label for op in cs.operating_points],
                "feasible": int(cs.feasible.sum()),
                "pareto_fraction": pareto_fraction(cs),
            }
        return is_valid, report
