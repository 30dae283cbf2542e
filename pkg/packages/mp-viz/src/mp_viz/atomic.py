from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Union

from .errors import OutputError

PathLike = Union[str, Path]


def atomic_write_bytes(dest: PathLike, data: bytes) -> Path:
    """Write bytes atomically so a failed run never leaves a half-written table."""
    dest = Path(dest)
    tmp_path = None
    try:
        dest.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            delete=False, dir=dest.parent, prefix=f".{dest.name}."
        ) as tmp:
            tmp.write(data)
            tmp.flush()
            os.fsync(tmp.fileno())
            tmp_path = Path(tmp.name)
        os.replace(tmp_path, dest)
    except OSError as e:
        if tmp_path is not None and tmp_path.exists():
            tmp_path.unlink()
        raise OutputError(str(dest), e.strerror or e.__class__.__name__) from e
    return dest


def atomic_write_text(dest: PathLike, text: str, encoding: str = "utf-8") -> Path:
    """Write text atomically; newlines are always LF so outputs are byte-stable."""
    return atomic_write_bytes(dest, text.encode(encoding))
