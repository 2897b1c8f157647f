"""Syntax tree for the query dialect.

Node equality ignores source spans so a pretty-printed and re-parsed tree
compares equal to the original. Spans are half-open [start, end) offsets
into the source plus the line/column of the first token.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    start: int
    end: int


def _span_field():
    return field(default=None, compare=False, repr=False)


# --- expressions -----------------------------------------------------------

@dataclass
class Literal:
    # kind distinguishes 1 from 1.0 and true from 1; Python == would not.
    kind: str  # integer | real | text | boolean | null
    value: Union[int, float, str, bool, None]
    span: Optional[Span] = _span_field()


@dataclass
class ColumnRef:
    table: Optional[str]
    name: str
    span: Optional[Span] = _span_field()


@dataclass
class Unary:
    op: str  # '-' | 'NOT' | 'IS NULL' | 'IS NOT NULL'
    operand: "Expr"
    span: Optional[Span] = _span_field()


@dataclass
class Binary:
    op: str  # + - * / % = != < <= > >= AND OR
    left: "Expr"
    right: "Expr"
    span: Optional[Span] = _span_field()


@dataclass
class FuncCall:
    name: str
    args: list["Expr"]
    star: bool = False  # COUNT(*)
    span: Optional[Span] = _span_field()


@dataclass
class InList:
    expr: "Expr"
    items: list["Expr"]
    negated: bool
    span: Optional[Span] = _span_field()


@dataclass
class InQuery:
    expr: "Expr"
    query: "SelectQuery"
    negated: bool
    span: Optional[Span] = _span_field()


@dataclass
class Exists:
    query: "SelectQuery"
    negated: bool
    span: Optional[Span] = _span_field()


@dataclass
class ScalarQuery:
    query: "SelectQuery"
    span: Optional[Span] = _span_field()


Expr = Union[Literal, ColumnRef, Unary, Binary, FuncCall, InList, InQuery, Exists, ScalarQuery]

AGGREGATE_FUNCTIONS = ("count", "sum", "avg", "min", "max")


def is_aggregate_call(expr) -> bool:
    return isinstance(expr, FuncCall) and expr.name.lower() in AGGREGATE_FUNCTIONS


def contains_aggregate(expr) -> bool:
    """True if any aggregate call appears outside subqueries."""
    if expr is None:
        return False
    if is_aggregate_call(expr):
        return True
    if isinstance(expr, Unary):
        return contains_aggregate(expr.operand)
    if isinstance(expr, Binary):
        return contains_aggregate(expr.left) or contains_aggregate(expr.right)
    if isinstance(expr, FuncCall):
        return any(contains_aggregate(a) for a in expr.args)
    if isinstance(expr, InList):
        return contains_aggregate(expr.expr) or any(contains_aggregate(i) for i in expr.items)
    if isinstance(expr, InQuery):
        return contains_aggregate(expr.expr)
    return False


# --- queries ---------------------------------------------------------------

@dataclass
class Star:
    span: Optional[Span] = _span_field()


@dataclass
class Projection:
    expr: Expr
    alias: Optional[str]
    span: Optional[Span] = _span_field()


@dataclass
class TableRef:
    name: str
    alias: Optional[str]
    latest: bool = False
    span: Optional[Span] = _span_field()

    def display_name(self) -> str:
        return self.alias if self.alias else self.name


@dataclass
class FromItem:
    # on is None for the first item and for comma-joined items; JOIN ... ON
    # carries the condition here.
    table: TableRef
    on: Optional[Expr]
    span: Optional[Span] = _span_field()


@dataclass
class OrderItem:
    expr: Expr
    descending: bool
    span: Optional[Span] = _span_field()


@dataclass
class MatchClause:
    column: str
    pattern: str
    span: Optional[Span] = _span_field()


@dataclass
class SelectQuery:
    distinct: bool
    projection: list[Union[Projection, Star]]
    from_items: list[FromItem]
    where: Optional[Expr]
    match: Optional[MatchClause]
    group_by: list[Expr]
    order_by: list[OrderItem]
    limit: Optional[int]
    span: Optional[Span] = _span_field()


# --- statements ------------------------------------------------------------

@dataclass
class ColumnDef:
    name: str
    type: str  # integer | real | text | boolean
    not_null: bool = False
    unique: bool = False
    checks: list[Expr] = field(default_factory=list)
    span: Optional[Span] = _span_field()


@dataclass
class InputDef:
    name: str
    columns: list[ColumnDef]
    span: Optional[Span] = _span_field()


@dataclass
class HistoryTableDef:
    name: str
    columns: list[ColumnDef]
    span: Optional[Span] = _span_field()


@dataclass
class ViewDef:
    name: str
    query: SelectQuery
    checks: list[Expr] = field(default_factory=list)
    span: Optional[Span] = _span_field()


@dataclass
class OutputDef:
    name: str
    query: SelectQuery
    checks: list[Expr] = field(default_factory=list)
    span: Optional[Span] = _span_field()


@dataclass
class InsertStatement:
    table: str
    columns: list[str]
    rows: Optional[list[list[Expr]]]  # VALUES form
    query: Optional[SelectQuery]      # INSERT ... SELECT form
    span: Optional[Span] = _span_field()


@dataclass
class StateProgramDef:
    after: Optional[list[str]]  # None runs on every input event
    body: list[InsertStatement]
    span: Optional[Span] = _span_field()


Statement = Union[InputDef, HistoryTableDef, ViewDef, OutputDef, StateProgramDef]


@dataclass
class Program:
    statements: list[Statement]
    source_name: str = field(default="<input>", compare=False)


# --- pretty printer --------------------------------------------------------

def _quote_string(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


def print_expr(e: Expr) -> str:
    if isinstance(e, Literal):
        if e.kind == "null":
            return "NULL"
        if e.kind == "boolean":
            return "TRUE" if e.value else "FALSE"
        if e.kind == "text":
            return _quote_string(e.value)
        if e.kind == "real":
            return repr(e.value)
        return str(e.value)
    if isinstance(e, ColumnRef):
        return f"{e.table}.{e.name}" if e.table else e.name
    if isinstance(e, Unary):
        if e.op == "-":
            return f"(-{print_expr(e.operand)})"
        if e.op == "NOT":
            return f"(NOT {print_expr(e.operand)})"
        return f"({print_expr(e.operand)} {e.op})"
    if isinstance(e, Binary):
        return f"({print_expr(e.left)} {e.op} {print_expr(e.right)})"
    if isinstance(e, FuncCall):
        inner = "*" if e.star else ", ".join(print_expr(a) for a in e.args)
        return f"{e.name}({inner})"
    if isinstance(e, InList):
        op = "NOT IN" if e.negated else "IN"
        return f"({print_expr(e.expr)} {op} ({', '.join(print_expr(i) for i in e.items)}))"
    if isinstance(e, InQuery):
        op = "NOT IN" if e.negated else "IN"
        return f"({print_expr(e.expr)} {op} ({print_select(e.query)}))"
    if isinstance(e, Exists):
        kw = "NOT EXISTS" if e.negated else "EXISTS"
        return f"{kw} ({print_select(e.query)})"
    if isinstance(e, ScalarQuery):
        return f"({print_select(e.query)})"
    raise TypeError(f"not an expression: {e!r}")


def print_select(q: SelectQuery) -> str:
    parts = ["SELECT"]
    if q.distinct:
        parts.append("DISTINCT")
    items = []
    for p in q.projection:
        if isinstance(p, Star):
            items.append("*")
        elif p.alias:
            items.append(f"{print_expr(p.expr)} AS {p.alias}")
        else:
            items.append(print_expr(p.expr))
    parts.append(", ".join(items))
    froms = []
    for i, fi in enumerate(q.from_items):
        ref = fi.table
        text = ("LATEST " if ref.latest else "") + ref.name
        if ref.alias:
            text += f" AS {ref.alias}"
        if i == 0:
            froms.append(text)
        elif fi.on is None:
            froms.append(f", {text}")
        else:
            froms.append(f" JOIN {text} ON {print_expr(fi.on)}")
    parts.append("FROM " + "".join(froms))
    if q.where is not None:
        parts.append(f"WHERE {print_expr(q.where)}")
    if q.match is not None:
        parts.append(f"MATCH {q.match.column} ON {_quote_string(q.match.pattern)}")
    if q.group_by:
        parts.append("GROUP BY " + ", ".join(print_expr(g) for g in q.group_by))
    if q.order_by:
        keys = [
            print_expr(o.expr) + (" DESC" if o.descending else "")
            for o in q.order_by
        ]
        parts.append("ORDER BY " + ", ".join(keys))
    if q.limit is not None:
        parts.append(f"LIMIT {q.limit}")
    return " ".join(parts)


def _print_column_def(c: ColumnDef) -> str:
    text = f"{c.name} {c.type.upper()}"
    if c.not_null:
        text += " NOT NULL"
    if c.unique:
        text += " UNIQUE"
    for chk in c.checks:
        text += f" CHECK ({print_expr(chk)})"
    return text


def print_statement(s: Statement) -> str:
    if isinstance(s, InputDef):
        cols = ", ".join(_print_column_def(c) for c in s.columns)
        return f"CREATE INPUT {s.name} ({cols});"
    if isinstance(s, HistoryTableDef):
        cols = ", ".join(_print_column_def(c) for c in s.columns)
        return f"CREATE TABLE {s.name} ({cols});"
    if isinstance(s, (ViewDef, OutputDef)):
        kw = "VIEW" if isinstance(s, ViewDef) else "OUTPUT"
        text = f"CREATE {kw} {s.name} AS {print_select(s.query)}"
        for chk in s.checks:
            text += f" CHECK ({print_expr(chk)})"
        return text + ";"
    if isinstance(s, StateProgramDef):
        head = "CREATE PROGRAM"
        if s.after is not None:
            head += " AFTER (" + ", ".join(s.after) + ")"
        body = " ".join(print_insert(i) for i in s.body)
        return f"{head} BEGIN {body} END;"
    raise TypeError(f"not a statement: {s!r}")


def print_insert(i: InsertStatement) -> str:
    head = f"INSERT INTO {i.table} ({', '.join(i.columns)})"
    if i.rows is not None:
        rows = ", ".join("(" + ", ".join(print_expr(e) for e in row) + ")" for row in i.rows)
        return f"{head} VALUES {rows};"
    return f"{head} {print_select(i.query)};"


def print_program(p: Program) -> str:
    return "\n".join(print_statement(s) for s in p.statements) + "\n"


# --- deterministic tree dump (CLI --emit ast) ------------------------------

def dump(node, indent: int = 0) -> str:
    pad = "  " * indent
    if node is None:
        return pad + "None"
    if isinstance(node, (str, int, float, bool)):
        return pad + repr(node)
    if isinstance(node, list):
        if not node:
            return pad + "[]"
        return "\n".join(dump(n, indent) for n in node)
    name = type(node).__name__
    scalars = []
    children = []
    for f in fields(node):
        if f.name == "span":
            continue
        v = getattr(node, f.name)
        if isinstance(v, (str, int, float, bool)) or v is None:
            scalars.append(f"{f.name}={v!r}")
        elif isinstance(v, list) and not v:
            scalars.append(f"{f.name}=[]")
        else:
            children.append((f.name, v))
    line = pad + name
    if scalars:
        line += " " + " ".join(scalars)
    out = [line]
    for fname, v in children:
        out.append(pad + f"  {fname}:")
        out.append(dump(v, indent + 2))
    return "\n".join(out)
