"""Scalar value domain.

Columns are typed integer, real, text, or boolean; every slot may also hold
null. Python booleans are a subclass of int, so every type dispatch below
must test bool first.
"""
from __future__ import annotations

from typing import Any

COLUMN_TYPES = ("integer", "real", "text", "boolean")

# Ranks for the canonical total order: null < boolean < numeric < text.
_RANK_NULL = 0
_RANK_BOOL = 1
_RANK_NUM = 2
_RANK_TEXT = 3


def type_of(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "real"
    if isinstance(value, str):
        return "text"
    raise TypeError(f"unsupported value {value!r}")


def sort_key(value: Any):
    """Key realising the canonical order. Integers and reals interleave
    numerically; text sorts by code point, which matches byte order for
    UTF-8."""
    if value is None:
        return (_RANK_NULL,)
    if isinstance(value, bool):
        return (_RANK_BOOL, value)
    if isinstance(value, (int, float)):
        return (_RANK_NUM, value)
    if isinstance(value, str):
        return (_RANK_TEXT, value)
    raise TypeError(f"unsupported value {value!r}")


def row_sort_key(row: tuple) -> tuple:
    return tuple(sort_key(v) for v in row)


def values_equal(a: Any, b: Any) -> bool:
    """Equality used by DISTINCT, GROUP BY, and UNIQUE: 1 == 1.0 but
    true != 1, and null equals null (grouping semantics, not WHERE)."""
    return sort_key(a) == sort_key(b)


def render_text(value: Any) -> str:
    """Render a value the way the wire and the match operator see it."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def storage_value(value: Any, ctype: str, where: str) -> Any:
    """Check a value against a column type before it is stored.

    Integers widen to reals; any other mismatch is a TypeError because the
    compiler should have rejected the program that produced it.
    """
    if value is None:
        return None
    actual = type_of(value)
    if actual == ctype:
        return value
    if ctype == "real" and actual == "integer":
        return float(value)
    raise TypeError(f"{where}: expected {ctype}, got {actual} ({value!r})")


def coerce_event_value(value: Any, ctype: str, where: str) -> Any:
    """Coerce a JSON-decoded event value to a column type.

    JSON has no integer/real distinction on the producing side, so whole
    numbers are accepted for real columns. Everything else is strict.
    """
    if value is None:
        return None
    if ctype == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"{where}: expected integer, got {value!r}")
        return value
    if ctype == "real":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"{where}: expected real, got {value!r}")
        return float(value)
    if ctype == "text":
        if not isinstance(value, str):
            raise TypeError(f"{where}: expected text, got {value!r}")
        return value
    if ctype == "boolean":
        if not isinstance(value, bool):
            raise TypeError(f"{where}: expected boolean, got {value!r}")
        return value
    raise ValueError(f"unknown column type {ctype!r}")


def coerce_csv_field(field: str, ctype: str, where: str) -> Any:
    """Static tables load from CSV; an empty field is null."""
    if field == "":
        return None
    if ctype == "integer":
        try:
            return int(field)
        except ValueError:
            raise TypeError(f"{where}: {field!r} is not an integer") from None
    if ctype == "real":
        try:
            return float(field)
        except ValueError:
            raise TypeError(f"{where}: {field!r} is not a real") from None
    if ctype == "boolean":
        low = field.lower()
        if low == "true":
            return True
        if low == "false":
            return False
        raise TypeError(f"{where}: {field!r} is not a boolean")
    return field


def infer_csv_type(fields: list[str]) -> str:
    """Pick the narrowest column type that fits every non-empty field."""
    seen = [f for f in fields if f != ""]
    if not seen:
        return "text"

    def all_parse(kind: str) -> bool:
        for f in seen:
            try:
                coerce_csv_field(f, kind, "infer")
            except TypeError:
                return False
        return True

    for kind in ("integer", "real", "boolean"):
        if all_parse(kind):
            return kind
    return "text"
