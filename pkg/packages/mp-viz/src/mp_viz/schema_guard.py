from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Any, Dict

from jsonschema import Draft202012Validator

from .errors import ConfigError, InputError, MetadataError


@lru_cache(maxsize=None)
def _validator(schema_name: str) -> Draft202012Validator:
    text = resources.files("mp_viz").joinpath("schemas", schema_name).read_text("utf-8")
    schema = json.loads(text)
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator(schema)


def check_against(obj: Dict[str, Any], schema_name: str, source: str) -> Dict[str, Any]:
    """Validate a parsed key/value document against a packaged JSON schema."""
    errors = sorted(_validator(schema_name).iter_errors(obj), key=lambda e: list(e.path))
    if errors:
        first = errors[0]
        where = ".".join(str(p) for p in first.path) or "<root>"
        cls: type[InputError] = ConfigError if schema_name.startswith("run-") else MetadataError
        raise cls(f"{source}: {where}: {first.message}")
    return obj
