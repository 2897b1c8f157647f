"""Trace and snapshot streams as JSON-Lines.

A trace records events to feed into an engine; a snapshot stream records
the output changes a replay produced. Both are one JSON object per line so
files diff, concatenate, and stream cleanly.

Encoding is pinned for byte determinism: objects are emitted with compact
separators, keys in schema order, integers without a fraction, reals in
shortest round-trip form (Python's float repr), null/true/false as JSON
literals, and non-ASCII text escaped.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable

from .database import Relation
from .errors import StreamError
from .runtime import LogEntry
from .values import row_sort_key


def _dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"))


@dataclass(frozen=True)
class TraceEntry:
    """One trace line, keeping its line number for diagnostics."""

    line_number: int
    input_name: str
    values: dict[str, Any]
    wallclock_ms: float


def read_trace(text: str) -> tuple[list[TraceEntry], list[str]]:
    """Parse a trace stream.

    Returns (entries, warnings). Decreasing timestamps warn rather than
    fail; anything structurally wrong raises StreamError with the line
    number."""
    entries: list[TraceEntry] = []
    warnings: list[str] = []
    previous = None
    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise StreamError(f"trace line {number}: {exc}") from None
        if not isinstance(obj, dict):
            raise StreamError(f"trace line {number}: expected a JSON object")
        missing = [k for k in ("input", "values", "timestamp") if k not in obj]
        if missing:
            raise StreamError(
                f"trace line {number}: missing {', '.join(missing)}")
        name, values, stamp = obj["input"], obj["values"], obj["timestamp"]
        if not isinstance(name, str):
            raise StreamError(f"trace line {number}: input must be a string")
        if not isinstance(values, dict):
            raise StreamError(f"trace line {number}: values must be an object")
        if isinstance(stamp, bool) or not isinstance(stamp, (int, float)):
            raise StreamError(f"trace line {number}: timestamp must be a number")
        if previous is not None and stamp < previous:
            warnings.append(
                f"trace line {number}: timestamp {stamp} is earlier than the"
                f" previous line")
        previous = stamp
        entries.append(TraceEntry(number, name, values, float(stamp)))
    return entries, warnings


def format_trace(log: Iterable[LogEntry]) -> str:
    """Render committed events back into trace form (the replay round trip)."""
    lines = [
        _dumps({"input": e.input_name, "values": e.values,
                "timestamp": e.wallclock_ms})
        for e in log
    ]
    return "".join(line + "\n" for line in lines)


def snapshot_rows(relation: Relation) -> list[dict[str, Any]]:
    """Rows as column-name-keyed objects, canonically sorted."""
    names = [c.name for c in relation.schema]
    ordered = sorted(relation.rows, key=row_sort_key)
    return [dict(zip(names, row)) for row in ordered]


def format_snapshot_line(timestep: int, output: str, relation: Relation) -> str:
    return _dumps({"timestep": timestep, "output": output,
                   "rows": snapshot_rows(relation)})


@dataclass(frozen=True)
class SnapshotLine:
    timestep: int
    output: str
    rows: list[dict[str, Any]]


def read_snapshots(text: str) -> list[SnapshotLine]:
    lines: list[SnapshotLine] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise StreamError(f"snapshot line {number}: {exc}") from None
        if not isinstance(obj, dict):
            raise StreamError(f"snapshot line {number}: expected a JSON object")
        missing = [k for k in ("timestep", "output", "rows") if k not in obj]
        if missing:
            raise StreamError(
                f"snapshot line {number}: missing {', '.join(missing)}")
        step, output, rows = obj["timestep"], obj["output"], obj["rows"]
        if isinstance(step, bool) or not isinstance(step, int):
            raise StreamError(f"snapshot line {number}: timestep must be an integer")
        if not isinstance(output, str):
            raise StreamError(f"snapshot line {number}: output must be a string")
        if not isinstance(rows, list) or any(not isinstance(r, dict) for r in rows):
            raise StreamError(f"snapshot line {number}: rows must be objects")
        lines.append(SnapshotLine(step, output, rows))
    return lines


def diff_snapshots(a: list[SnapshotLine], b: list[SnapshotLine]) -> str | None:
    """Describe the first difference between two snapshot streams.

    Streams compare line by line; rows within a line compare as a bag, so
    the report can say which rows appeared or disappeared. Returns None
    when the streams are equivalent."""
    for i in range(min(len(a), len(b))):
        la, lb = a[i], b[i]
        if (la.timestep, la.output) != (lb.timestep, lb.output):
            return (f"line {i + 1}: timestep {la.timestep} output"
                    f" {la.output} vs timestep {lb.timestep} output {lb.output}")
        bag_a = Counter(json.dumps(r, sort_keys=True) for r in la.rows)
        bag_b = Counter(json.dumps(r, sort_keys=True) for r in lb.rows)
        if bag_a == bag_b:
            continue
        parts = []
        for row, n in sorted((bag_b - bag_a).items()):
            parts.append(f"+{n} row {row}" if n == 1 else f"+{n} rows {row}")
        for row, n in sorted((bag_a - bag_b).items()):
            parts.append(f"-{n} row {row}" if n == 1 else f"-{n} rows {row}")
        return (f"timestep {la.timestep}, output {la.output}: "
                + "; ".join(parts))
    if len(a) != len(b):
        longer = a if len(a) > len(b) else b
        first_extra = longer[min(len(a), len(b))]
        return (f"stream lengths differ ({len(a)} vs {len(b)} lines);"
                f" first extra line is timestep {first_extra.timestep},"
                f" output {first_extra.output}")
    return None
