"""Relations, tables, and the append-only store.

A Relation is a schema plus a bag of rows. A Table is a named relation with
a kind; rows are only ever appended. Rollback of an event that has not
committed is the runtime's job and happens by truncating to a recorded
length, which is why Table exposes no removal API of its own.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field

from .errors import DuplicateFunction
from .values import (
    COLUMN_TYPES,
    coerce_csv_field,
    infer_csv_type,
    row_sort_key,
    storage_value,
)

TABLE_KINDS = ("input", "history", "static")

# Implicit columns appended to every input and history table, in this order.
IMPLICIT_COLUMNS = (("timestep", "integer"), ("timestamp", "real"))


@dataclass(frozen=True)
class Column:
    name: str
    type: str

    def __post_init__(self):
        # "any" marks a derived column whose type is not statically known,
        # e.g. the result of a registered function; declarations never use it
        if self.type not in COLUMN_TYPES and self.type != "any":
            raise ValueError(f"unknown column type {self.type!r}")


@dataclass
class Relation:
    schema: tuple[Column, ...]
    rows: list[tuple] = field(default_factory=list)

    def column_names(self) -> list[str]:
        return [c.name for c in self.schema]

    def index_of(self, name: str) -> int:
        low = name.lower()
        for i, c in enumerate(self.schema):
            if c.name.lower() == low:
                return i
        raise KeyError(f"no column {name!r}; have {', '.join(self.column_names())}")

    def sorted_rows(self) -> list[tuple]:
        return sorted(self.rows, key=row_sort_key)


def multiset_equal(a: Relation, b: Relation) -> bool:
    """Schemas equal and rows equal as bags. Column names compare
    case-insensitively, like every other identifier."""
    if len(a.schema) != len(b.schema):
        return False
    for ca, cb in zip(a.schema, b.schema):
        if ca.name.lower() != cb.name.lower() or ca.type != cb.type:
            return False
    if len(a.rows) != len(b.rows):
        return False
    return Counter(map(row_sort_key, a.rows)) == Counter(map(row_sort_key, b.rows))


class Table:
    """Append-only named relation."""

    def __init__(self, name: str, kind: str, schema: tuple[Column, ...]):
        if kind not in TABLE_KINDS:
            raise ValueError(f"unknown table kind {kind!r}")
        self.name = name
        self.kind = kind
        self.schema = schema
        self.rows: list[tuple] = []

    def relation(self) -> Relation:
        return Relation(self.schema, self.rows)

    def append_rows(self, rows: list[tuple]) -> int:
        """Append, normalising integers stored in real columns. Arity or
        type mismatches raise TypeError: they signal a compiler bug, not a
        constraint violation."""
        checked = []
        for row in rows:
            if len(row) != len(self.schema):
                raise TypeError(
                    f"{self.name}: row has {len(row)} values, schema has {len(self.schema)}"
                )
            checked.append(
                tuple(
                    storage_value(v, c.type, f"{self.name}.{c.name}")
                    for v, c in zip(row, self.schema)
                )
            )
        self.rows.extend(checked)
        return len(checked)


class FunctionRegistry:
    """Scalar functions callable from queries."""

    def __init__(self):
        self._fns: dict[str, tuple[int, object, str]] = {}
        register_builtins(self)

    def register(self, name: str, arity: int, fn, return_type: str = "any") -> None:
        key = name.lower()
        if key in self._fns:
            raise DuplicateFunction(f"function {name!r} already registered")
        self._fns[key] = (arity, fn, return_type)

    def lookup(self, name: str):
        return self._fns.get(name.lower())


def is_within_box(lat_min, lon_min, lat_max, lon_max, lat, lon):
    """Boundary-inclusive box test. Any null argument yields null."""
    args = (lat_min, lon_min, lat_max, lon_max, lat, lon)
    if any(a is None for a in args):
        return None
    return lat_min <= lat <= lat_max and lon_min <= lon <= lon_max


def register_builtins(registry: FunctionRegistry) -> None:
    registry.register("is_within_box", 6, is_within_box, "boolean")


class Database:
    """All tables of one engine instance, keyed case-insensitively."""

    def __init__(self):
        self._tables: dict[str, Table] = {}
        self.functions = FunctionRegistry()

    def create_table(self, name: str, kind: str, user_columns: list[Column]) -> Table:
        schema = list(user_columns)
        if kind in ("input", "history"):
            schema += [Column(n, t) for n, t in IMPLICIT_COLUMNS]
        return self.add_table(Table(name, kind, tuple(schema)))

    def add_table(self, table: Table) -> Table:
        """Adopt a table whose schema already carries its implicit columns."""
        key = table.name.lower()
        if key in self._tables:
            raise ValueError(f"table {table.name!r} already exists")
        self._tables[key] = table
        return table

    def table(self, name: str) -> Table:
        try:
            return self._tables[name.lower()]
        except KeyError:
            raise KeyError(f"no table {name!r}") from None

    def has_table(self, name: str) -> bool:
        return name.lower() in self._tables

    def tables(self) -> list[Table]:
        return list(self._tables.values())

    def register_scalar_function(self, name: str, arity: int, fn, return_type: str = "any") -> None:
        self.functions.register(name, arity, fn, return_type)


def parse_static_csv(name: str, text: str, schema: tuple[Column, ...] | None = None
                     ) -> tuple[tuple[Column, ...], list[tuple]]:
    """Parse CSV content for a static table.

    The first line is a header. With a declared schema the header must name
    exactly the declared columns; without one, column types are inferred
    from the data. Empty fields are null either way.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError(f"static {name!r}: empty CSV") from None
    records = [row for row in reader if row]
    for i, row in enumerate(records):
        if len(row) != len(header):
            raise ValueError(f"static {name!r}: row {i + 2} has {len(row)} fields, header has {len(header)}")

    if schema is not None:
        declared = [c.name.lower() for c in schema]
        if [h.lower() for h in header] != declared:
            raise ValueError(
                f"static {name!r}: header {header} does not match declared columns {[c.name for c in schema]}"
            )
        columns = tuple(schema)
    else:
        columns = tuple(
            Column(h, infer_csv_type([row[i] for row in records]))
            for i, h in enumerate(header)
        )

    rows = [
        tuple(
            coerce_csv_field(fieldv, col.type, f"{name}.{col.name}")
            for fieldv, col in zip(row, columns)
        )
        for row in records
    ]
    return columns, rows
