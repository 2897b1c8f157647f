"""Plan evaluation.

A small interpreting executor over compiled plans. Rows are plain tuples;
NULL is None and comparisons follow three-valued logic. All operators keep
a deterministic row order (scans in insertion order, joins left-major,
groups in first-appearance order, sorts stable), so two runs over the same
store produce identical row lists, not merely equal bags.
"""
from __future__ import annotations

import math
from functools import reduce
from operator import add

from . import plan as P
from .database import Relation
from .errors import EvalError
from .match import captured_rows, find_matches
from .values import render_text, sort_key


def _class_of(v) -> int:
    if isinstance(v, bool):
        return 1
    if isinstance(v, (int, float)):
        return 2
    return 3


def _compare(a, b) -> int:
    """Order two non-null values: value classes first (boolean, numeric,
    text), then the natural order within the class."""
    ca, cb = _class_of(a), _class_of(b)
    if ca != cb:
        return -1 if ca < cb else 1
    if a == b:
        return 0
    return -1 if a < b else 1


def _not(v):
    return None if v is None else (not v)


class Evaluator:
    """Executes plans against a resolver mapping relation names to
    Relations. The resolver sees lowercase names; the runtime points it at
    live tables plus the views already materialized this cycle."""

    def __init__(self, resolver, functions):
        self.resolver = resolver
        self.functions = functions

    def evaluate(self, plan: P.Plan, env: tuple = ()) -> Relation:
        return Relation(plan.schema, self.rows(plan, env))

    # -- plan nodes

    def rows(self, plan: P.Plan, env: tuple = ()) -> list[tuple]:
        method = getattr(self, "_run_" + type(plan).__name__.lower())
        return method(plan, env)

    def _run_scan(self, plan: P.Scan, env) -> list[tuple]:
        if not plan.relation:
            return []
        return list(self.resolver(plan.relation.lower()).rows)

    def _run_filter(self, plan: P.Filter, env) -> list[tuple]:
        return [
            row for row in self.rows(plan.input, env)
            if self.scalar(plan.predicate, row, env) is True
        ]

    def _run_project(self, plan: P.Project, env) -> list[tuple]:
        return [
            tuple(self.scalar(e, row, env) for e in plan.exprs)
            for row in self.rows(plan.input, env)
        ]

    def _run_join(self, plan: P.Join, env) -> list[tuple]:
        left = self.rows(plan.left, env)
        right = self.rows(plan.right, env)
        out = []
        for lrow in left:
            for rrow in right:
                row = lrow + rrow
                if plan.predicate is None or self.scalar(plan.predicate, row, env) is True:
                    out.append(row)
        return out

    def _run_aggregate(self, plan: P.Aggregate, env) -> list[tuple]:
        rows = self.rows(plan.input, env)
        if not plan.group_exprs:
            return [tuple(self._aggregate(spec, rows, env) for spec in plan.aggs)]
        order: list = []
        groups: dict = {}
        for row in rows:
            values = tuple(self.scalar(g, row, env) for g in plan.group_exprs)
            key = tuple(sort_key(v) for v in values)
            bucket = groups.get(key)
            if bucket is None:
                groups[key] = (values, [row])
                order.append(key)
            else:
                bucket[1].append(row)
        return [
            groups[key][0] + tuple(self._aggregate(spec, groups[key][1], env)
                                   for spec in plan.aggs)
            for key in order
        ]

    def _aggregate(self, spec: P.AggSpec, rows: list[tuple], env):
        if spec.arg is None:  # COUNT(*)
            return len(rows)
        values = [
            v for row in rows
            if (v := self.scalar(spec.arg, row, env)) is not None
        ]
        if spec.func == "count":
            return len(values)
        if not values:
            return None
        if spec.func == "sum":
            return reduce(add, values)
        if spec.func == "avg":
            return reduce(add, values) / len(values)
        if spec.func == "min":
            return min(values, key=sort_key)
        if spec.func == "max":
            return max(values, key=sort_key)
        raise EvalError(f"unknown aggregate {spec.func!r}")

    def _run_sort(self, plan: P.Sort, env) -> list[tuple]:
        rows = list(self.rows(plan.input, env))
        # one stable pass per key, least significant first
        for key in reversed(plan.keys):
            rows.sort(
                key=lambda row: sort_key(self.scalar(key.expr, row, env)),
                reverse=key.descending,
            )
        return rows

    def _run_limit(self, plan: P.Limit, env) -> list[tuple]:
        return self.rows(plan.input, env)[: plan.count]

    def _run_distinct(self, plan: P.Distinct, env) -> list[tuple]:
        seen = set()
        out = []
        for row in self.rows(plan.input, env):
            key = tuple(sort_key(v) for v in row)
            if key not in seen:
                seen.add(key)
                out.append(row)
        return out

    def _run_matchop(self, plan: P.MatchOp, env) -> list[tuple]:
        rows = list(self.rows(plan.input, env))
        if plan.order_index is not None:
            rows.sort(key=lambda row: sort_key(row[plan.order_index]))
        symbols = [
            None if row[plan.symbol_index] is None else render_text(row[plan.symbol_index])
            for row in rows
        ]
        out = []
        mg = 0
        for match in find_matches(plan.nfa, symbols):
            covered = captured_rows(match)
            if not covered:
                continue
            for idx in covered:
                out.append((mg,) + rows[idx])
            mg += 1
        return out

    # -- scalar expressions

    def scalar(self, e: P.CExpr, row: tuple, env: tuple):
        if isinstance(e, P.Lit):
            return e.value
        if isinstance(e, P.Col):
            return row[e.index]
        if isinstance(e, P.Outer):
            return env[-e.up][e.index]
        if isinstance(e, P.Unary):
            v = self.scalar(e.operand, row, env)
            if e.op == "isnull":
                return v is None
            if e.op == "notnull":
                return v is not None
            if v is None:
                return None
            return -v if e.op == "neg" else (not v)
        if isinstance(e, P.Binary):
            return self._binary(e, row, env)
        if isinstance(e, P.Call):
            entry = self.functions.lookup(e.name)
            if entry is None:
                raise EvalError(f"unknown function {e.name!r}")
            args = [self.scalar(a, row, env) for a in e.args]
            return entry[1](*args)
        if isinstance(e, P.Coalesce):
            for a in e.args:
                v = self.scalar(a, row, env)
                if v is not None:
                    return v
            return None
        if isinstance(e, P.InList):
            x = self.scalar(e.expr, row, env)
            result = False
            for item in e.items:
                v = self._equal(x, self.scalar(item, row, env))
                if v is True:
                    result = True
                    break
                if v is None:
                    result = None
            return _not(result) if e.negated else result
        if isinstance(e, P.InQuery):
            x = self.scalar(e.expr, row, env)
            result = False
            for sub in self.rows(e.plan, env + (row,)):
                v = self._equal(x, sub[0])
                if v is True:
                    result = True
                    break
                if v is None:
                    result = None
            return _not(result) if e.negated else result
        if isinstance(e, P.Exists):
            found = bool(self.rows(e.plan, env + (row,)))
            return not found if e.negated else found
        if isinstance(e, P.Scalar):
            rows = self.rows(e.plan, env + (row,))
            if len(rows) > 1:
                raise EvalError(f"scalar subquery produced {len(rows)} rows")
            return rows[0][0] if rows else None
        raise TypeError(f"not a compiled expression: {e!r}")

    def _equal(self, a, b):
        if a is None or b is None:
            return None
        return _compare(a, b) == 0

    def _binary(self, e: P.Binary, row: tuple, env: tuple):
        op = e.op
        a = self.scalar(e.left, row, env)
        if op == "and":
            if a is False:
                return False
            b = self.scalar(e.right, row, env)
            if b is False:
                return False
            return None if (a is None or b is None) else True
        if op == "or":
            if a is True:
                return True
            b = self.scalar(e.right, row, env)
            if b is True:
                return True
            return None if (a is None or b is None) else False
        b = self.scalar(e.right, row, env)
        if op in ("+", "-", "*", "/", "%"):
            if a is None or b is None:
                return None
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0:
                return None  # division by zero is null, not an error
            if isinstance(a, int) and isinstance(b, int):
                q = a // b
                if q < 0 and q * b != a:
                    q += 1  # floor to truncation for mixed signs
                if op == "/":
                    return q
                return a - q * b
            return a / b if op == "/" else math.fmod(a, b)
        if a is None or b is None:
            return None
        c = _compare(a, b)
        if op == "=":
            return c == 0
        if op == "!=":
            return c != 0
        if op == "<":
            return c < 0
        if op == "<=":
            return c <= 0
        if op == ">":
            return c > 0
        return c >= 0
