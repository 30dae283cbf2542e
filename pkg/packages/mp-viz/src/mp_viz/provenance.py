"""
MP-Viz Provenance

Content digests of input files and the `.meta` sidecars written next to every
output. Sidecars carry file names, digests and resolved parameters only, so a
rerun with the same inputs produces the same bytes.
"""

import hashlib
from pathlib import Path
from typing import Any, Iterable, List, Optional, Tuple, Union

try:
    import blake3
    HAS_BLAKE3 = True
except ImportError:
    HAS_BLAKE3 = False

from .atomic import atomic_write_text
from .config import RunConfig, format_key_values

META_SUFFIX = ".meta"
_CHUNK = 1 << 20


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + META_SUFFIX)


def file_digest(path: Union[str, Path]) -> str:
    """Digest of a file's bytes, prefixed with the algorithm used."""
    if HAS_BLAKE3:
        hasher = blake3.blake3()
        algo = "blake3"
    else:
        # Fallback to SHA-256 if BLAKE3 not available
        hasher = hashlib.sha256()
        algo = "sha256"
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(_CHUNK), b""):
            hasher.update(chunk)
    return f"{algo}:{hasher.hexdigest()}"


def run_pairs(run: RunConfig) -> List[Tuple[str, Any]]:
    digests = {p: file_digest(p) for p in run.inputs if Path(p).is_file()}
    return [(f"run.{key}", value) for key, value in run.sidecar_pairs(digests)]


def write_sidecar(
    output: Union[str, Path],
    body: Iterable[Tuple[str, Any]] = (),
    run: Optional[RunConfig] = None,
) -> Path:
    """Write `<output>.meta`: descriptive keys first, then `run.*` keys."""
    pairs = list(body)
    if run is not None:
        pairs.extend(run_pairs(run))
    return atomic_write_text(sidecar_path(output), format_key_values(pairs))
