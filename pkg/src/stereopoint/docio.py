"""Helpers for the JSON document formats used at every file boundary.

All documents are JSON objects carrying a ``schema_version`` field.
Serialization is canonical (two-space indent, insertion-ordered keys,
shortest round-trip float repr, trailing newline) so that identical
inputs always produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .errors import ParseError, ValidationError

SCHEMA_VERSION = 1


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def parse_object(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError("document", f"invalid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ParseError("document", "top level must be an object")
    return obj


def check_schema_version(obj: dict) -> None:
    version = require(obj, "schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")


def require(obj: dict, field: str, path: str = "") -> Any:
    name = f"{path}.{field}" if path else field
    if field not in obj:
        raise ParseError(name, "missing")
    return obj[field]


def as_number(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(field, f"expected a number, got {type(value).__name__}")
    return float(value)


def as_finite(value: Any, field: str) -> float:
    number = as_number(value, field)
    if not math.isfinite(number):
        raise ValidationError(field, f"must be finite, got {number}")
    return number


def as_int(value: Any, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(field, f"expected an integer, got {type(value).__name__}")
    return value


def as_str(value: Any, field: str) -> str:
    if not isinstance(value, str):
        raise ParseError(field, f"expected a string, got {type(value).__name__}")
    return value


def as_list(value: Any, field: str) -> list:
    if not isinstance(value, list):
        raise ParseError(field, f"expected a list, got {type(value).__name__}")
    return value


def as_object(value: Any, field: str) -> dict:
    if not isinstance(value, dict):
        raise ParseError(field, f"expected an object, got {type(value).__name__}")
    return value


def as_xy(value: Any, field: str) -> tuple[float, float]:
    pair = as_list(value, field)
    if len(pair) != 2:
        raise ParseError(field, f"expected [x, y], got {len(pair)} values")
    return as_finite(pair[0], field), as_finite(pair[1], field)


def as_xyz(value: Any, field: str) -> tuple[float, float, float]:
    triple = as_list(value, field)
    if len(triple) != 3:
        raise ParseError(field, f"expected [x, y, z], got {len(triple)} values")
    return (
        as_finite(triple[0], field),
        as_finite(triple[1], field),
        as_finite(triple[2], field),
    )
