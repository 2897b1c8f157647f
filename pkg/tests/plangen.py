"""Seeded generators for random databases, plans, and row patterns.

Shared by the evaluator tests and the acceptance suite. Everything is
driven by a random.Random instance, so any failing case can be rebuilt
from its seed alone. Generated plans are type-tracked: arithmetic only
over numeric columns, SUM/AVG only over numeric arguments, and scalar
subqueries are capped at one row, so evaluation is total and the only
legal disagreement between engine and oracle is a real bug.
"""
from __future__ import annotations

import random

from diel import plan as P
from diel.database import Column, FunctionRegistry, Relation
from diel.match import compile_pattern

TYPES = ("integer", "real", "text", "boolean")

# Small pools so joins, DISTINCT, and GROUP BY collide often.
INTS = (-5, -2, -1, 0, 1, 2, 3, 7)
REALS = (-2.5, -1.0, 0.0, 0.5, 1.5, 2.0, 4.25)
TEXTS = ("a", "b", "c", "dd", "x")
BOOLS = (False, True)

NULL_RATE = 0.2


def make_functions() -> FunctionRegistry:
    registry = FunctionRegistry()
    registry.register(
        "absval", 1, lambda v: None if v is None else abs(v), "any"
    )
    return registry


def random_value(rng: random.Random, ctype: str):
    if rng.random() < NULL_RATE:
        return None
    if ctype == "integer":
        return rng.choice(INTS)
    if ctype == "real":
        return rng.choice(REALS)
    if ctype == "text":
        return rng.choice(TEXTS)
    return rng.choice(BOOLS)


def random_database(rng: random.Random) -> dict[str, Relation]:
    """1-3 tables named t0..t2, 1-3 typed columns, up to 8 rows each."""
    tables: dict[str, Relation] = {}
    for t in range(rng.randint(1, 3)):
        schema = tuple(
            Column(f"c{i}", rng.choice(TYPES)) for i in range(rng.randint(1, 3))
        )
        rows = [
            tuple(random_value(rng, c.type) for c in schema)
            for _ in range(rng.randint(0, 8))
        ]
        tables[f"t{t}"] = Relation(schema, rows)
    return tables


# --- typed expression generation ---------------------------------------------

_NUMERIC = ("integer", "real")


def _columns_of(schema, want):
    if want == "numeric":
        return [i for i, c in enumerate(schema) if c.type in _NUMERIC]
    if want == "any":
        return list(range(len(schema)))
    return [i for i, c in enumerate(schema) if c.type == want]


def _literal(rng: random.Random, want: str):
    if rng.random() < 0.1:
        return P.Lit(None)
    if want == "numeric":
        want = rng.choice(_NUMERIC)
    if want == "any":
        want = rng.choice(TYPES)
    if want == "integer":
        return P.Lit(rng.choice(INTS))
    if want == "real":
        return P.Lit(rng.choice(REALS))
    if want == "text":
        return P.Lit(rng.choice(TEXTS))
    return P.Lit(rng.choice(BOOLS))


class PlanGen:
    """One generator instance per (seed, database) pair.

    schemas is the stack of row schemas visible to the expression being
    generated; the last entry is the current row, earlier entries are
    enclosing queries reachable through Outer references.
    """

    def __init__(self, rng: random.Random, tables: dict[str, Relation]):
        self.rng = rng
        self.tables = tables

    # -- expressions

    def expr(self, schemas, want: str, depth: int):
        rng = self.rng
        roll = rng.random()
        if depth <= 0 or roll < 0.45:
            return self.leaf(schemas, want)
        if want == "boolean":
            return self.bool_expr(schemas, depth)
        if want in ("numeric", "integer", "real"):
            return self.numeric_expr(schemas, want, depth)
        if roll < 0.6:
            return P.Coalesce(
                [self.expr(schemas, want, depth - 1) for _ in range(rng.randint(2, 3))]
            )
        return self.leaf(schemas, want)

    def leaf(self, schemas, want: str):
        rng = self.rng
        # prefer a column of the right type, fall back to a literal
        if rng.random() < 0.75:
            cols = _columns_of(schemas[-1], want)
            if cols and rng.random() < 0.85:
                return P.Col(rng.choice(cols))
            for up in range(1, len(schemas)):
                outer_cols = _columns_of(schemas[-1 - up], want)
                if outer_cols and rng.random() < 0.5:
                    return P.Outer(up, rng.choice(outer_cols))
        return _literal(rng, want)

    def numeric_expr(self, schemas, want: str, depth: int):
        rng = self.rng
        roll = rng.random()
        if roll < 0.15:
            return P.Unary("neg", self.expr(schemas, want, depth - 1))
        if roll < 0.25:
            return P.Call("absval", [self.expr(schemas, want, depth - 1)])
        if roll < 0.35:
            return P.Coalesce(
                [self.expr(schemas, want, depth - 1) for _ in range(2)]
            )
        if roll < 0.45 and depth >= 2:
            return P.Scalar(self.scalar_subplan(schemas, want))
        op = rng.choice(("+", "-", "*", "/", "%"))
        return P.Binary(
            op,
            self.expr(schemas, "numeric", depth - 1),
            self.expr(schemas, "numeric", depth - 1),
        )

    def bool_expr(self, schemas, depth: int):
        rng = self.rng
        roll = rng.random()
        if roll < 0.3:
            op = rng.choice(("=", "!=", "<", "<=", ">", ">="))
            side = rng.choice(("numeric", "text", "boolean", "any"))
            return P.Binary(
                op,
                self.expr(schemas, side, depth - 1),
                self.expr(schemas, side, depth - 1),
            )
        if roll < 0.45:
            op = rng.choice(("and", "or"))
            return P.Binary(
                op,
                self.bool_expr(schemas, depth - 1),
                self.bool_expr(schemas, depth - 1),
            )
        if roll < 0.55:
            return P.Unary("not", self.bool_expr(schemas, depth - 1))
        if roll < 0.65:
            op = rng.choice(("isnull", "notnull"))
            return P.Unary(op, self.expr(schemas, "any", depth - 1))
        if roll < 0.75:
            side = rng.choice(("integer", "real", "text"))
            return P.InList(
                self.expr(schemas, side, depth - 1),
                [_literal(rng, side) for _ in range(rng.randint(1, 3))],
                rng.random() < 0.5,
            )
        if roll < 0.85 and depth >= 2:
            side = rng.choice(("integer", "real", "text"))
            sub = self.subplan(schemas, max_depth=2)
            sub = self.single_column(sub, side)
            return P.InQuery(
                self.expr(schemas, side, depth - 1), sub, rng.random() < 0.5
            )
        if roll < 0.95 and depth >= 2:
            return P.Exists(self.subplan(schemas, max_depth=2), rng.random() < 0.5)
        return P.Call(
            "is_within_box",
            [self.expr(schemas, "numeric", 1) for _ in range(6)],
        )

    def scalar_subplan(self, schemas, want: str) -> P.Plan:
        """A subplan guaranteed to yield at most one row of one column."""
        rng = self.rng
        base = self.subplan(schemas, max_depth=1)
        if rng.random() < 0.5:
            agg = rng.choice(("min", "max", "sum", "avg", "count"))
            arg_want = "numeric" if agg in ("sum", "avg") else want
            spec = P.AggSpec(agg, self.expr(schemas + [base.schema], arg_want, 1))
            out_type = "integer" if agg == "count" else "any"
            return P.Aggregate(base, [], [spec], (Column("a0", out_type),))
        narrowed = self.single_column(base, want)
        return P.Limit(narrowed, 1, narrowed.schema)

    def single_column(self, plan: P.Plan, want: str) -> P.Plan:
        cols = _columns_of(plan.schema, want)
        if cols:
            idx = self.rng.choice(cols)
            expr, ctype = P.Col(idx), plan.schema[idx].type
        else:
            lit = _literal(self.rng, want)
            expr, ctype = lit, "any"
        return P.Project(plan, [expr], (Column("q0", ctype),))

    # -- plans

    def subplan(self, outer_schemas, max_depth: int) -> P.Plan:
        return self.plan(max_depth, outer_schemas)

    def plan(self, depth: int, outer_schemas=()) -> P.Plan:
        rng = self.rng
        outer = list(outer_schemas)
        name = rng.choice(sorted(self.tables))
        node: P.Plan = P.Scan(name, self.tables[name].schema)
        wraps = rng.randint(0, depth - 1) if depth > 1 else 0
        for _ in range(wraps):
            node = self.wrap(node, outer, depth)
        return node

    def wrap(self, node: P.Plan, outer, depth: int) -> P.Plan:
        rng = self.rng
        schemas = outer + [node.schema]
        kind = rng.choice(
            ("filter", "filter", "project", "project", "join",
             "aggregate", "sort", "limit", "distinct", "match")
        )
        if kind == "filter":
            return P.Filter(node, self.bool_expr(schemas, 2), node.schema)
        if kind == "project":
            n = rng.randint(1, 3)
            exprs, cols = [], []
            for i in range(n):
                want = rng.choice(("integer", "real", "text", "boolean", "numeric", "any"))
                exprs.append(self.expr(schemas, want, 2))
                cols.append(Column(f"p{i}", want if want in TYPES else "any"))
            return P.Project(node, exprs, tuple(cols))
        if kind == "join":
            other = self.plan(max(1, depth - 1), outer)
            schema = node.schema + other.schema
            pred = None
            if rng.random() < 0.7:
                pred = self.bool_expr(outer + [schema], 2)
            return P.Join(node, other, pred, schema)
        if kind == "aggregate":
            groups, gcols = [], []
            for i in range(rng.randint(0, 2)):
                want = rng.choice(("integer", "real", "text", "boolean"))
                groups.append(self.expr(schemas, want, 1))
                gcols.append(Column(f"g{i}", want))
            aggs, acols = [], []
            for i in range(rng.randint(1, 2)):
                func = rng.choice(("count", "sum", "avg", "min", "max"))
                if func == "count" and rng.random() < 0.3:
                    arg = None
                else:
                    want = "numeric" if func in ("sum", "avg") else "any"
                    arg = self.expr(schemas, want, 1)
                aggs.append(P.AggSpec(func, arg))
                acols.append(Column(f"a{i}", "integer" if func == "count" else "any"))
            return P.Aggregate(node, groups, aggs, tuple(gcols) + tuple(acols))
        if kind == "sort":
            keys = [
                P.SortKey(self.expr(schemas, rng.choice(("numeric", "text", "any")), 1),
                          rng.random() < 0.5)
                for _ in range(rng.randint(1, 2))
            ]
            return P.Sort(node, keys, node.schema)
        if kind == "limit":
            return P.Limit(node, rng.randint(0, 5), node.schema)
        if kind == "distinct":
            return P.Distinct(node, node.schema)
        # match: needs a text column to carry symbols, otherwise filter
        text_cols = _columns_of(node.schema, "text")
        if not text_cols:
            return P.Filter(node, self.bool_expr(schemas, 2), node.schema)
        symbol_index = rng.choice(text_cols)
        order_index = rng.choice([None] + list(range(len(node.schema))))
        pattern = random_pattern(rng, TEXTS)
        schema = (Column("mg", "integer"),) + node.schema
        return P.MatchOp(node, symbol_index, order_index, pattern,
                         compile_pattern(pattern), schema)


def random_plan(rng: random.Random, tables: dict[str, Relation],
                max_depth: int = 4) -> P.Plan:
    return PlanGen(rng, tables).plan(max_depth)


# --- row patterns -------------------------------------------------------------

def random_pattern(rng: random.Random, symbols=TEXTS, depth: int = 2) -> str:
    """Alternation over concatenations of quantified atoms. Symbols are
    space-separated so adjacent ones never fuse into a single token."""

    def alt(d: int) -> str:
        return "|".join(concat(d) for _ in range(rng.randint(1, 2)))

    def concat(d: int) -> str:
        return " ".join(quant(d) for _ in range(rng.randint(1, 3)))

    def quant(d: int) -> str:
        a = atom(d)
        roll = rng.random()
        if roll < 0.15:
            return a + "*"
        if roll < 0.30:
            return a + "+"
        if roll < 0.40:
            return a + "?"
        return a

    def atom(d: int) -> str:
        if d > 0 and rng.random() < 0.4:
            inner = alt(d - 1)
            if rng.random() < 0.25:
                return "(?:" + inner + ")"
            return "(" + inner + ")"
        return rng.choice(symbols)

    return alt(depth)


def random_symbols(rng: random.Random, alphabet=TEXTS, max_len: int = 10) -> list:
    """A symbol sequence as stored rows would render it; None breaks runs."""
    out = []
    for _ in range(rng.randint(0, max_len)):
        if rng.random() < 0.08:
            out.append(None)
        else:
            out.append(rng.choice(alphabet))
    return out
