"""
MP-Viz Configuration

Plain `key = value` text is the one configuration and metadata format of the
toolkit: candidate sidecars, run sidecars, quality reports and the optional
`--config` file all use it. This module parses and writes that format, turns a
config file into a click default_map, and holds RunConfig, the resolved
parameter set of one subcommand.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from .errors import ConfigError, MetadataError
from .schema_guard import check_against

METHODS = ("tsne", "pca", "isomap")
SCALE_MODES = ("zscore", "minmax", "none")
CONNECT_POLICIES = ("largest", "strict", "mst")

# Dense O(N^2) paths; overridable for big machines.
MAX_CANDIDATES = int(os.getenv("MP_MAX_CANDIDATES", 20_000))


def parse_key_values(text: str, source: str = "<text>") -> Dict[str, str]:
    """Parse `key = value` lines; blank lines and `#` comments are skipped."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MetadataError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise MetadataError(f"{source}:{lineno}: empty key")
        if key in out:
            raise MetadataError(f"{source}:{lineno}: duplicate key '{key}'")
        out[key] = value.strip()
    return out


def read_key_values(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MetadataError(f"{path}: file not found") from None
    return parse_key_values(text, source=path.name)


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def format_key_values(pairs: Iterable[Tuple[str, Any]]) -> str:
    return "".join(f"{key} = {format_value(value)}\n" for key, value in pairs)


def split_list(value: str) -> list:
    return [v.strip() for v in value.split(",") if v.strip()]


def load_config(path: Union[str, Path]) -> Dict[str, str]:
    """Read and schema-check a `--config` file."""
    raw = read_key_values(path)
    normalized = {key.replace("-", "_"): value for key, value in raw.items()}
    try:
        return check_against(normalized, "run-config.schema.json", Path(path).name)
    except MetadataError as e:
        raise ConfigError(str(e)) from None


def build_default_map(
    config: Mapping[str, str], commands: Mapping[str, Sequence[str]]
) -> Dict[str, Dict[str, str]]:
    """Spread config keys over subcommands.

    `commands` maps each subcommand to its parameter names. A bare key applies
    to every subcommand that has the parameter; `sub.key` targets one
    subcommand and wins over the bare form.
    """
    default_map: Dict[str, Dict[str, str]] = {name: {} for name in commands}
    scoped = []
    for key, value in config.items():
        if "." in key:
            scoped.append((key, value))
            continue
        targets = [name for name, params in commands.items() if key in params]
        if not targets:
            raise ConfigError(f"config key '{key}' matches no option of any subcommand")
        for name in targets:
            default_map[name][key] = value
    for key, value in scoped:
        sub, opt = key.split(".", 1)
        if sub not in commands:
            raise ConfigError(f"config key '{key}': unknown subcommand '{sub}'")
        if opt not in commands[sub]:
            raise ConfigError(f"config key '{key}': '{sub}' has no option '{opt}'")
        default_map[sub][opt] = value
    return {name: values for name, values in default_map.items() if values}


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of one subcommand run."""

    subcommand: str
    inputs: Tuple[str, ...] = ()
    output: Optional[str] = None
    method: Optional[str] = None
    params: Mapping[str, Any] = field(default_factory=dict)

    def get(self, name: str, default: Any = None) -> Any:
        return self.params.get(name, default)

    def validate(self) -> "RunConfig":
        p = self.params
        if self.method is not None and self.method not in METHODS:
            raise ConfigError(f"unknown method '{self.method}' (choose from {', '.join(METHODS)})")
        if self.method == "isomap" and (p.get("k") is None or p["k"] < 1):
            raise ConfigError("isomap needs a neighborhood size --k >= 1")
        if p.get("dims") is not None and p["dims"] not in (2, 3):
            raise ConfigError(f"--dims must be 2 or 3, got {p['dims']}")
        if p.get("scale") is not None and p["scale"] not in SCALE_MODES:
            raise ConfigError(f"--scale must be one of {', '.join(SCALE_MODES)}")
        if p.get("connect") is not None and p["connect"] not in CONNECT_POLICIES:
            raise ConfigError(f"--connect must be one of {', '.join(CONNECT_POLICIES)}")
        if p.get("perplexity") is not None and p["perplexity"] <= 1:
            raise ConfigError(f"--perplexity must exceed 1, got {p['perplexity']}")
        for name in ("iterations", "clusters", "pop_size", "width", "height"):
            if p.get(name) is not None and p[name] < 1:
                raise ConfigError(f"--{name.replace('_', '-')} must be >= 1, got {p[name]}")
        for name in ("learning_rate", "radius", "torque_margin"):
            if p.get(name) is not None and p[name] <= 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive, got {p[name]}")
        if p.get("generations") is not None and p["generations"] < 0:
            raise ConfigError("--generations must be >= 0")
        if p.get("pop_size") is not None and (p["pop_size"] < 4 or p["pop_size"] % 2):
            raise ConfigError(f"--pop-size must be even and >= 4, got {p['pop_size']}")
        return self

    def sidecar_pairs(self, digests: Mapping[str, str] = {}) -> list:
        """Key/value lines echoed next to outputs. File names only, never absolute paths."""
        pairs: list = [("subcommand", self.subcommand)]
        for i, path in enumerate(self.inputs):
            name = Path(path).name
            pairs.append((f"input.{i}", name))
            if path in digests:
                pairs.append((f"input.{i}.digest", digests[path]))
        if self.output is not None:
            pairs.append(("output", Path(self.output).name))
        if self.method is not None:
            pairs.append(("method", self.method))
        pairs.extend(sorted(self.params.items()))
        return pairs
