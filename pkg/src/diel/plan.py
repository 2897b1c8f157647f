"""Logical plans and compiled expressions.

The compiler resolves every column reference to a positional index, so
plans carry no names except for Scan targets and output schemas. Outer(up,
index) reaches the row of an enclosing query, `up` levels out.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .database import Column


# --- compiled expressions ---------------------------------------------------

@dataclass
class Lit:
    value: Union[int, float, str, bool, None]


@dataclass
class Col:
    index: int


@dataclass
class Outer:
    up: int
    index: int


@dataclass
class Unary:
    op: str  # neg | not | isnull | notnull
    operand: "CExpr"


@dataclass
class Binary:
    op: str  # + - * / % = != < <= > >= and or
    left: "CExpr"
    right: "CExpr"


@dataclass
class Call:
    name: str
    args: list["CExpr"]


@dataclass
class Coalesce:
    args: list["CExpr"]


@dataclass
class InList:
    expr: "CExpr"
    items: list["CExpr"]
    negated: bool


@dataclass
class InQuery:
    expr: "CExpr"
    plan: "Plan"
    negated: bool


@dataclass
class Exists:
    plan: "Plan"
    negated: bool


@dataclass
class Scalar:
    plan: "Plan"


CExpr = Union[Lit, Col, Outer, Unary, Binary, Call, Coalesce, InList, InQuery, Exists, Scalar]


# --- plan operators ----------------------------------------------------------

@dataclass
class Scan:
    relation: str
    schema: tuple[Column, ...]


@dataclass
class Filter:
    input: "Plan"
    predicate: CExpr
    schema: tuple[Column, ...]


@dataclass
class Project:
    input: "Plan"
    exprs: list[CExpr]
    schema: tuple[Column, ...]


@dataclass
class Join:
    left: "Plan"
    right: "Plan"
    predicate: Optional[CExpr]  # None is a cross join
    schema: tuple[Column, ...]


@dataclass
class AggSpec:
    func: str                    # count | sum | avg | min | max
    arg: Optional[CExpr]         # None only for COUNT(*)


@dataclass
class Aggregate:
    input: "Plan"
    group_exprs: list[CExpr]
    aggs: list[AggSpec]
    schema: tuple[Column, ...]   # group columns then aggregate columns


@dataclass
class SortKey:
    expr: CExpr
    descending: bool


@dataclass
class Sort:
    input: "Plan"
    keys: list[SortKey]
    schema: tuple[Column, ...]


@dataclass
class Limit:
    input: "Plan"
    count: int
    schema: tuple[Column, ...]


@dataclass
class Distinct:
    input: "Plan"
    schema: tuple[Column, ...]


@dataclass
class MatchOp:
    """Runs the row-pattern machine over the input, ordered by the column
    at order_index when present. Output rows are (mg,) + input row."""

    input: "Plan"
    symbol_index: int
    order_index: Optional[int]
    pattern: str
    nfa: object = field(compare=False)
    schema: tuple[Column, ...] = ()


Plan = Union[Scan, Filter, Project, Join, Aggregate, Sort, Limit, Distinct, MatchOp]


# --- deterministic formatting (CLI --emit plan) ------------------------------

def format_expr(e: CExpr, schemas: list[tuple[Column, ...]]) -> str:
    """Print with column names taken from the schema stack; innermost last."""
    def name_at(schema_idx: int, col: int) -> str:
        schema = schemas[schema_idx]
        if 0 <= col < len(schema):
            return schema[col].name
        return f"#{col}"

    if isinstance(e, Lit):
        if e.value is None:
            return "NULL"
        if isinstance(e.value, bool):
            return "TRUE" if e.value else "FALSE"
        if isinstance(e.value, str):
            return "'" + e.value.replace("'", "''") + "'"
        return repr(e.value)
    if isinstance(e, Col):
        return name_at(len(schemas) - 1, e.index)
    if isinstance(e, Outer):
        return f"outer({e.up}).{name_at(len(schemas) - 1 - e.up, e.index)}"
    if isinstance(e, Unary):
        body = format_expr(e.operand, schemas)
        return {"neg": f"(-{body})", "not": f"(NOT {body})",
                "isnull": f"({body} IS NULL)", "notnull": f"({body} IS NOT NULL)"}[e.op]
    if isinstance(e, Binary):
        return f"({format_expr(e.left, schemas)} {e.op} {format_expr(e.right, schemas)})"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a, schemas) for a in e.args)})"
    if isinstance(e, Coalesce):
        return f"COALESCE({', '.join(format_expr(a, schemas) for a in e.args)})"
    if isinstance(e, InList):
        op = "NOT IN" if e.negated else "IN"
        return f"({format_expr(e.expr, schemas)} {op} ({', '.join(format_expr(i, schemas) for i in e.items)}))"
    if isinstance(e, InQuery):
        op = "NOT IN" if e.negated else "IN"
        return f"({format_expr(e.expr, schemas)} {op} (\n{format_plan(e.plan, 2, schemas)}))"
    if isinstance(e, Exists):
        kw = "NOT EXISTS" if e.negated else "EXISTS"
        return f"{kw} (\n{format_plan(e.plan, 2, schemas)})"
    if isinstance(e, Scalar):
        return f"scalar(\n{format_plan(e.plan, 2, schemas)})"
    raise TypeError(f"not a compiled expression: {e!r}")


def _input_plans(plan: Plan) -> list[Plan]:
    if isinstance(plan, Join):
        return [plan.left, plan.right]
    if isinstance(plan, Scan):
        return []
    return [plan.input]


def format_plan(plan: Plan, indent: int = 0, outer_schemas: list | None = None) -> str:
    pad = "  " * indent
    outer = outer_schemas or []

    def fmt(e: CExpr, base: Plan) -> str:
        return format_expr(e, outer + [base.schema])

    if isinstance(plan, Scan):
        cols = ", ".join(f"{c.name} {c.type}" for c in plan.schema)
        return f"{pad}Scan {plan.relation} [{cols}]"
    if isinstance(plan, Filter):
        head = f"{pad}Filter {fmt(plan.predicate, plan.input)}"
    elif isinstance(plan, Project):
        cols = ", ".join(
            f"{fmt(e, plan.input)} AS {c.name}" for e, c in zip(plan.exprs, plan.schema)
        )
        head = f"{pad}Project [{cols}]"
    elif isinstance(plan, Join):
        pred = "cross" if plan.predicate is None else format_expr(plan.predicate, outer + [plan.schema])
        head = f"{pad}Join {pred}"
    elif isinstance(plan, Aggregate):
        groups = ", ".join(fmt(g, plan.input) for g in plan.group_exprs)
        aggs = ", ".join(
            f"{a.func}({'*' if a.arg is None else fmt(a.arg, plan.input)})" for a in plan.aggs
        )
        head = f"{pad}Aggregate groups=[{groups}] aggs=[{aggs}]"
    elif isinstance(plan, Sort):
        keys = ", ".join(
            fmt(k.expr, plan.input) + (" DESC" if k.descending else "") for k in plan.keys
        )
        head = f"{pad}Sort [{keys}]"
    elif isinstance(plan, Limit):
        head = f"{pad}Limit {plan.count}"
    elif isinstance(plan, Distinct):
        head = f"{pad}Distinct"
    elif isinstance(plan, MatchOp):
        sym = plan.input.schema[plan.symbol_index].name
        head = f"{pad}Match column={sym} pattern='{plan.pattern}'"
    else:
        raise TypeError(f"not a plan: {plan!r}")

    lines = [head]
    for child in _input_plans(plan):
        lines.append(format_plan(child, indent + 1, outer))
    return "\n".join(lines)
