"""Validation and lowering.

validate() turns a parsed program into a Catalog: table schemas with their
implicit columns attached, every view and output lowered to a plan, state
programs compiled, and a dependency order over the views. All semantic
errors are collected before failing so the CLI can report them together.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Optional

from . import ast, plan as P
from .database import Column, FunctionRegistry, IMPLICIT_COLUMNS
from .errors import CompileFailure, PatternError, SemanticError
from .match import compile_pattern

_NUMERIC = ("integer", "real")
_WILD = ("any", "null")

IMPLICIT_NAMES = tuple(name for name, _ in IMPLICIT_COLUMNS)


# --- catalog -----------------------------------------------------------------

@dataclass
class TableConstraint:
    kind: str                    # not_null | unique | check
    column: Optional[int]        # for not_null / unique
    expr: Optional[P.CExpr]      # for check
    label: str


@dataclass
class CatalogTable:
    name: str
    kind: str                    # input | history | static
    schema: tuple[Column, ...]
    user_count: int
    constraints: list[TableConstraint] = dc_field(default_factory=list)

    def user_columns(self) -> tuple[Column, ...]:
        return self.schema[: self.user_count]


@dataclass
class CatalogView:
    name: str
    kind: str                    # view | output
    query: ast.SelectQuery       # desugared form
    plan: P.Plan
    schema: tuple[Column, ...]
    checks: list[P.CExpr] = dc_field(default_factory=list)
    reads: list[str] = dc_field(default_factory=list)  # lowercase relation names


@dataclass
class CompiledInsert:
    table: str
    column_indices: list[int]
    rows: Optional[list[list[P.CExpr]]]
    plan: Optional[P.Plan]


@dataclass
class CatalogProgram:
    after: Optional[list[str]]   # lowercase input names; None runs on every event
    inserts: list[CompiledInsert]


@dataclass
class Catalog:
    source_name: str
    tables: dict[str, CatalogTable]
    views: dict[str, CatalogView]
    inputs: list[str]            # declaration order
    outputs: list[str]           # declaration order
    view_order: list[str]        # dependency order over views and outputs
    programs: list[CatalogProgram]
    functions: FunctionRegistry

    def relation_schema(self, name: str) -> tuple[Column, ...]:
        key = name.lower()
        if key in self.tables:
            return self.tables[key].schema
        return self.views[key].schema


# --- LATEST desugaring ---------------------------------------------------------

def _max_timestep_query(table: str) -> ast.SelectQuery:
    return ast.SelectQuery(
        distinct=False,
        projection=[ast.Projection(ast.FuncCall("MAX", [ast.ColumnRef(None, "timestep")]), None)],
        from_items=[ast.FromItem(ast.TableRef(table, None, False), None)],
        where=None, match=None, group_by=[], order_by=[], limit=None,
    )


def _desugar_expr(e):
    if e is None:
        return None
    if isinstance(e, ast.Unary):
        return ast.Unary(e.op, _desugar_expr(e.operand), span=e.span)
    if isinstance(e, ast.Binary):
        return ast.Binary(e.op, _desugar_expr(e.left), _desugar_expr(e.right), span=e.span)
    if isinstance(e, ast.FuncCall):
        return ast.FuncCall(e.name, [_desugar_expr(a) for a in e.args], e.star, span=e.span)
    if isinstance(e, ast.InList):
        return ast.InList(_desugar_expr(e.expr), [_desugar_expr(i) for i in e.items],
                          e.negated, span=e.span)
    if isinstance(e, ast.InQuery):
        return ast.InQuery(_desugar_expr(e.expr), desugar_latest(e.query), e.negated, span=e.span)
    if isinstance(e, ast.Exists):
        return ast.Exists(desugar_latest(e.query), e.negated, span=e.span)
    if isinstance(e, ast.ScalarQuery):
        return ast.ScalarQuery(desugar_latest(e.query), span=e.span)
    return e


def desugar_latest(query: ast.SelectQuery) -> ast.SelectQuery:
    """Rewrite every LATEST table reference into a timestep filter: the
    reference loses its flag and the WHERE clause gains the conjunct
    ref.timestep = (SELECT MAX(timestep) FROM base). Each reference gets
    its own subquery, so joins of several LATEST tables stay independent."""
    conjuncts = []
    new_from = []
    for fi in query.from_items:
        ref = fi.table
        if ref.latest:
            display = ref.alias or ref.name
            conjuncts.append(ast.Binary(
                "=",
                ast.ColumnRef(display, "timestep"),
                ast.ScalarQuery(_max_timestep_query(ref.name)),
                span=ref.span,
            ))
            ref = ast.TableRef(ref.name, ref.alias, False, span=ref.span)
        new_from.append(ast.FromItem(ref, _desugar_expr(fi.on), span=fi.span))

    where = _desugar_expr(query.where)
    for c in conjuncts:
        where = c if where is None else ast.Binary("AND", where, c)

    projection = []
    for item in query.projection:
        if isinstance(item, ast.Star):
            projection.append(item)
        else:
            projection.append(ast.Projection(_desugar_expr(item.expr), item.alias, span=item.span))
    return ast.SelectQuery(
        distinct=query.distinct,
        projection=projection,
        from_items=new_from,
        where=where,
        match=query.match,
        group_by=[_desugar_expr(g) for g in query.group_by],
        order_by=[ast.OrderItem(_desugar_expr(o.expr), o.descending, span=o.span)
                  for o in query.order_by],
        limit=query.limit,
        span=query.span,
    )


# --- dependency order -----------------------------------------------------------

def desugar_program(program: ast.Program) -> ast.Program:
    """The whole program with every LATEST rewritten away, for inspection."""
    statements = []
    for st in program.statements:
        if isinstance(st, (ast.ViewDef, ast.OutputDef)):
            st = replace(st, query=desugar_latest(st.query))
        elif isinstance(st, ast.StateProgramDef):
            body = [
                ins if ins.query is None
                else replace(ins, query=desugar_latest(ins.query))
                for ins in st.body
            ]
            st = replace(st, body=body)
        statements.append(st)
    return ast.Program(statements, program.source_name)


def dependency_order(deps: dict[str, set[str]], declaration: list[str]) -> list[str]:
    """Topological order over views; ties broken by declaration order.
    Raises ValueError naming the members of a cycle."""
    universe = set(declaration)
    done: set[str] = set()
    order: list[str] = []
    remaining = list(declaration)
    while remaining:
        ready = [n for n in remaining
                 if all(d in done for d in deps.get(n, ()) if d in universe and d != n)]
        ready = [n for n in ready if n not in deps.get(n, ())]
        if not ready:
            raise ValueError("cyclic view dependencies: " + ", ".join(sorted(remaining)))
        picked = ready[0]
        done.add(picked)
        order.append(picked)
        remaining.remove(picked)
    return order


# --- scopes ---------------------------------------------------------------------

@dataclass
class _ScopeColumn:
    name: str
    type: str
    implicit: bool


@dataclass
class _ScopeTable:
    display: str
    columns: list[_ScopeColumn]
    offset: int


class _Frame:
    def __init__(self):
        self.tables: list[_ScopeTable] = []
        self.width = 0
        # set when a FROM item failed to resolve; column lookups that miss
        # then resolve silently so one bad table name does not cascade
        self.poisoned = False

    def add_table(self, display: str, columns: list[_ScopeColumn]) -> _ScopeTable:
        entry = _ScopeTable(display, columns, self.width)
        self.tables.append(entry)
        self.width += len(columns)
        return entry


# --- compiler --------------------------------------------------------------------

class _Compiler:
    def __init__(self, program: ast.Program, statics, functions: FunctionRegistry | None):
        self.program = program
        self.statics = list(statics or ())
        self.functions = functions or FunctionRegistry()
        self.errors: list[SemanticError] = []
        self.tables: dict[str, CatalogTable] = {}
        self.views: dict[str, CatalogView] = {}
        self.view_defs: dict[str, ast.Statement] = {}
        self.view_decl: list[str] = []
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.current_reads: set[str] = set()

    # -- error helpers

    def err(self, span: Optional[ast.Span], category: str, message: str) -> None:
        line, column = (span.line, span.column) if span else (0, 0)
        entry = SemanticError(category, message, line, column)
        # reference checking and lowering both walk the queries; report
        # the same finding once
        if entry not in self.errors:
            self.errors.append(entry)

    def _savepoint(self) -> int:
        return len(self.errors)

    def _rollback(self, point: int) -> bool:
        failed = len(self.errors) > point
        del self.errors[point:]
        return failed

    # -- phase 1: relations

    def collect_relations(self) -> None:
        for name, columns in self.statics:
            self._declare_table(name, "static", list(columns), None, implicit=False)
        for stmt in self.program.statements:
            if isinstance(stmt, ast.InputDef):
                self._declare_columns(stmt)
                self._declare_table(stmt.name, "input",
                                    [Column(c.name, c.type) for c in stmt.columns], stmt.span)
                self.inputs.append(stmt.name)
            elif isinstance(stmt, ast.HistoryTableDef):
                self._declare_columns(stmt)
                self._declare_table(stmt.name, "history",
                                    [Column(c.name, c.type) for c in stmt.columns], stmt.span)
            elif isinstance(stmt, (ast.ViewDef, ast.OutputDef)):
                key = stmt.name.lower()
                if key in self.tables or key in self.view_defs:
                    self.err(stmt.span, "duplicate-name", f"relation {stmt.name!r} is already declared")
                    continue
                self.view_defs[key] = stmt
                self.view_decl.append(key)
                if isinstance(stmt, ast.OutputDef):
                    self.outputs.append(stmt.name)

    def _declare_columns(self, stmt) -> None:
        seen = set()
        for c in stmt.columns:
            low = c.name.lower()
            if low in seen:
                self.err(c.span, "duplicate-column",
                         f"column {c.name!r} declared twice in {stmt.name!r}")
            seen.add(low)
            if low in IMPLICIT_NAMES:
                self.err(c.span, "reserved-column",
                         f"column name {c.name!r} is reserved for the engine")

    def _declare_table(self, name, kind, user_columns, span, implicit=True) -> None:
        key = name.lower()
        if key in self.tables or key in self.view_defs:
            self.err(span, "duplicate-name", f"relation {name!r} is already declared")
            return
        schema = list(user_columns)
        if implicit and kind in ("input", "history"):
            schema += [Column(n, t) for n, t in IMPLICIT_COLUMNS]
        self.tables[key] = CatalogTable(name, kind, tuple(schema), len(user_columns))

    # -- phase 2: reference scan for dependency ordering

    def _query_table_refs(self, q: ast.SelectQuery, out: list[ast.TableRef]) -> None:
        for fi in q.from_items:
            out.append(fi.table)
            if fi.on is not None:
                self._expr_table_refs(fi.on, out)
        for item in q.projection:
            if isinstance(item, ast.Projection):
                self._expr_table_refs(item.expr, out)
        if q.where is not None:
            self._expr_table_refs(q.where, out)
        for g in q.group_by:
            self._expr_table_refs(g, out)
        for o in q.order_by:
            self._expr_table_refs(o.expr, out)

    def _expr_table_refs(self, e, out: list[ast.TableRef]) -> None:
        if isinstance(e, ast.Unary):
            self._expr_table_refs(e.operand, out)
        elif isinstance(e, ast.Binary):
            self._expr_table_refs(e.left, out)
            self._expr_table_refs(e.right, out)
        elif isinstance(e, ast.FuncCall):
            for a in e.args:
                self._expr_table_refs(a, out)
        elif isinstance(e, ast.InList):
            self._expr_table_refs(e.expr, out)
            for i in e.items:
                self._expr_table_refs(i, out)
        elif isinstance(e, ast.InQuery):
            self._expr_table_refs(e.expr, out)
            self._query_table_refs(e.query, out)
        elif isinstance(e, ast.Exists):
            self._query_table_refs(e.query, out)
        elif isinstance(e, ast.ScalarQuery):
            self._query_table_refs(e.query, out)

    def check_references(self) -> dict[str, set[str]]:
        """Unknown relation names and misplaced LATEST flags; returns the
        view-to-view dependency sets used for ordering."""
        deps: dict[str, set[str]] = {}
        for key in self.view_decl:
            stmt = self.view_defs[key]
            refs: list[ast.TableRef] = []
            self._query_table_refs(stmt.query, refs)
            deps[key] = set()
            for ref in refs:
                low = ref.name.lower()
                if low in self.tables:
                    kind = self.tables[low].kind
                    if ref.latest and kind == "static":
                        self.err(ref.span, "latest-misuse",
                                 f"LATEST requires timestamped rows; {ref.name!r} is a static table")
                elif low in self.view_defs:
                    deps[key].add(low)
                    if ref.latest:
                        self.err(ref.span, "latest-misuse",
                                 f"LATEST requires timestamped rows; {ref.name!r} is a view")
                else:
                    self.err(ref.span, "unknown-relation", f"unknown relation {ref.name!r}")
        return deps

    # -- phase 3: expression compilation

    def resolve_column(self, frames: list[_Frame], ref: ast.ColumnRef):
        """Returns (levels_up, flat_index, type) or None after recording an
        error. Bare names must be unambiguous within a frame."""
        for up, frame in enumerate(reversed(frames)):
            if ref.table is not None:
                target = None
                for t in frame.tables:
                    if t.display.lower() == ref.table.lower():
                        target = t
                        break
                if target is None:
                    continue
                for i, col in enumerate(target.columns):
                    if col.name.lower() == ref.name.lower():
                        return up, target.offset + i, col.type
                self.err(ref.span, "unknown-column",
                         f"no column {ref.name!r} in {ref.table!r}")
                return None
            hits = []
            for t in frame.tables:
                for i, col in enumerate(t.columns):
                    if col.name.lower() == ref.name.lower():
                        hits.append((t.offset + i, col.type, t.display))
            if len(hits) > 1:
                names = ", ".join(h[2] or "match result" for h in hits)
                self.err(ref.span, "ambiguous-column",
                         f"column {ref.name!r} is ambiguous (in {names})")
                return None
            if hits:
                return up, hits[0][0], hits[0][1]
        if any(f.poisoned for f in frames):
            return 0, 0, "any"
        if ref.table is not None:
            self.err(ref.span, "unknown-table", f"unknown table {ref.table!r} in column reference")
        else:
            self.err(ref.span, "unknown-column", f"unknown column {ref.name!r}")
        return None

    def comparable(self, a: str, b: str, span, what: str) -> None:
        if a in _WILD or b in _WILD:
            return
        if a == b or (a in _NUMERIC and b in _NUMERIC):
            return
        self.err(span, "type-mismatch", f"{what}: cannot compare {a} with {b}")

    def assignable(self, src: str, dst: str, span, what: str) -> None:
        if src in _WILD or dst in _WILD:
            return
        if src == dst or (src == "integer" and dst == "real"):
            return
        self.err(span, "type-mismatch", f"{what}: {src} value does not fit {dst} column")

    def compile_expr(self, e: ast.Expr, frames: list[_Frame]) -> tuple[P.CExpr, str]:
        dummy = (P.Lit(None), "any")
        if isinstance(e, ast.Literal):
            return P.Lit(e.value), e.kind
        if isinstance(e, ast.ColumnRef):
            resolved = self.resolve_column(frames, e)
            if resolved is None:
                return dummy
            up, index, ctype = resolved
            return (P.Col(index) if up == 0 else P.Outer(up, index)), ctype
        if isinstance(e, ast.Unary):
            operand, otype = self.compile_expr(e.operand, frames)
            if e.op == "-":
                if otype not in _NUMERIC + _WILD:
                    self.err(e.span, "type-mismatch", f"operand of unary - is {otype}, not numeric")
                return P.Unary("neg", operand), (otype if otype in _NUMERIC else "any")
            if e.op == "NOT":
                if otype not in ("boolean",) + _WILD:
                    self.err(e.span, "type-mismatch", f"operand of NOT is {otype}, not boolean")
                return P.Unary("not", operand), "boolean"
            op = "isnull" if e.op == "IS NULL" else "notnull"
            return P.Unary(op, operand), "boolean"
        if isinstance(e, ast.Binary):
            left, lt = self.compile_expr(e.left, frames)
            right, rt = self.compile_expr(e.right, frames)
            op = e.op
            if op in ("+", "-", "*", "/", "%"):
                for t in (lt, rt):
                    if t not in _NUMERIC + _WILD:
                        self.err(e.span, "type-mismatch", f"operand of {op} is {t}, not numeric")
                if lt == "integer" and rt == "integer":
                    rtype = "integer"
                elif {lt, rt} <= set(_NUMERIC):
                    rtype = "real"
                else:
                    rtype = "any"
                return P.Binary(op, left, right), rtype
            if op in ("AND", "OR"):
                for t in (lt, rt):
                    if t not in ("boolean",) + _WILD:
                        self.err(e.span, "type-mismatch", f"operand of {op} is {t}, not boolean")
                return P.Binary(op.lower(), left, right), "boolean"
            self.comparable(lt, rt, e.span, f"operands of {op}")
            return P.Binary(op, left, right), "boolean"
        if isinstance(e, ast.FuncCall):
            if ast.is_aggregate_call(e):
                self.err(e.span, "misplaced-aggregate",
                         f"aggregate {e.name}() is only allowed in SELECT projections and ORDER BY")
                return dummy
            if e.name.lower() == "coalesce":
                if not e.args:
                    self.err(e.span, "arity", "COALESCE needs at least one argument")
                    return dummy
                compiled = [self.compile_expr(a, frames) for a in e.args]
                rtype = "any"
                for _, t in compiled:
                    if t not in _WILD:
                        rtype = t
                        break
                for _, t in compiled:
                    self.comparable(rtype, t, e.span, "COALESCE arguments")
                return P.Coalesce([c for c, _ in compiled]), rtype
            entry = self.functions.lookup(e.name)
            if entry is None:
                self.err(e.span, "unknown-function", f"unknown function {e.name!r}")
                return dummy
            arity, _, rtype = entry
            if e.star or len(e.args) != arity:
                self.err(e.span, "arity",
                         f"{e.name}() takes {arity} arguments, got {'*' if e.star else len(e.args)}")
            args = [self.compile_expr(a, frames)[0] for a in e.args]
            return P.Call(e.name.lower(), args), rtype
        if isinstance(e, ast.InList):
            left, lt = self.compile_expr(e.expr, frames)
            items = []
            for item in e.items:
                c, t = self.compile_expr(item, frames)
                self.comparable(lt, t, e.span, "IN list")
                items.append(c)
            return P.InList(left, items, e.negated), "boolean"
        if isinstance(e, ast.InQuery):
            left, lt = self.compile_expr(e.expr, frames)
            sub = self.lower_select(e.query, frames)
            if len(sub.schema) != 1:
                self.err(e.span, "arity", "IN subquery must project exactly one column")
            else:
                self.comparable(lt, sub.schema[0].type, e.span, "IN subquery")
            return P.InQuery(left, sub, e.negated), "boolean"
        if isinstance(e, ast.Exists):
            sub = self.lower_select(e.query, frames)
            return P.Exists(sub, e.negated), "boolean"
        if isinstance(e, ast.ScalarQuery):
            sub = self.lower_select(e.query, frames)
            if len(sub.schema) != 1:
                self.err(e.span, "arity", "scalar subquery must project exactly one column")
                return dummy
            return P.Scalar(sub), sub.schema[0].type
        raise TypeError(f"not an expression: {e!r}")

    # -- phase 4: query lowering

    def _scan(self, ref: ast.TableRef, frame: _Frame) -> Optional[P.Scan]:
        low = ref.name.lower()
        if low in self.tables:
            entry = self.tables[low]
            schema = entry.schema
            user = entry.user_count
            canonical = entry.name
        elif low in self.views:
            view = self.views[low]
            schema = view.schema
            user = len(schema)
            canonical = view.name
        else:
            self.err(ref.span, "unknown-relation", f"unknown relation {ref.name!r}")
            return None
        if ref.latest:
            # desugaring runs first; a leftover flag is a compiler bug
            raise AssertionError("LATEST survived desugaring")
        display = ref.alias or ref.name
        for t in frame.tables:
            if t.display.lower() == display.lower():
                self.err(ref.span, "duplicate-table",
                         f"{display!r} appears twice in FROM; give it an alias")
        columns = [
            _ScopeColumn(c.name, c.type, i >= user)
            for i, c in enumerate(schema)
        ]
        frame.add_table(display, columns)
        self.current_reads.add(low)
        return P.Scan(canonical, schema)

    def lower_select(self, query: ast.SelectQuery, outer_frames: list[_Frame]) -> P.Plan:
        frame = _Frame()
        frames = outer_frames + [frame]
        node: Optional[P.Plan] = None
        for fi in query.from_items:
            scan = self._scan(fi.table, frame)
            if scan is None:
                frame.poisoned = True
                continue
            if node is None:
                node = scan
            else:
                schema = node.schema + scan.schema
                pred = None
                if fi.on is not None:
                    pred, ptype = self.compile_expr(fi.on, frames)
                    if ptype not in ("boolean",) + _WILD:
                        self.err(fi.span, "type-mismatch", f"JOIN condition is {ptype}, not boolean")
                node = P.Join(node, scan, pred, schema)
        if node is None:
            # every FROM item failed to resolve; synthesize an empty scan so
            # later checks can still run
            node = P.Scan("", ())

        if query.where is not None:
            if ast.contains_aggregate(query.where):
                self.err(query.span, "misplaced-aggregate", "aggregates are not allowed in WHERE")
            pred, ptype = self.compile_expr(query.where, frames)
            if ptype not in ("boolean",) + _WILD:
                self.err(query.span, "type-mismatch", f"WHERE condition is {ptype}, not boolean")
            node = P.Filter(node, pred, node.schema)

        if query.match is not None:
            node, frame = self._lower_match(query.match, node, frames)
            frames = outer_frames + [frame]

        # ORDER BY may name projection aliases; swap the alias for its
        # expression before aggregate analysis.
        alias_map = {}
        for item in query.projection:
            if isinstance(item, ast.Projection) and item.alias:
                alias_map[item.alias.lower()] = item.expr
        order_items = []
        for o in query.order_by:
            expr = o.expr
            if isinstance(expr, ast.ColumnRef) and expr.table is None and expr.name.lower() in alias_map:
                expr = alias_map[expr.name.lower()]
            order_items.append(ast.OrderItem(expr, o.descending, span=o.span))

        grouped = bool(query.group_by)
        for item in query.projection:
            if isinstance(item, ast.Projection) and ast.contains_aggregate(item.expr):
                grouped = True
        for o in order_items:
            if ast.contains_aggregate(o.expr):
                grouped = True

        if grouped:
            node, translate = self._lower_grouped(query, order_items, node, frames)
            proj_pairs = []
            for item in query.projection:
                if isinstance(item, ast.Star):
                    self.err(item.span, "star-with-group", "SELECT * cannot be grouped")
                    continue
                cexpr, ctype = translate(item.expr)
                proj_pairs.append((item, cexpr, ctype))
            sort_keys = [P.SortKey(translate(o.expr)[0], o.descending) for o in order_items]
        else:
            proj_pairs = []
            for item in query.projection:
                if isinstance(item, ast.Star):
                    for t in frame.tables:
                        for i, col in enumerate(t.columns):
                            if col.implicit:
                                continue
                            fake = ast.Projection(ast.ColumnRef(None, col.name), None)
                            proj_pairs.append((fake, P.Col(t.offset + i), col.type))
                else:
                    cexpr, ctype = self.compile_expr(item.expr, frames)
                    proj_pairs.append((item, cexpr, ctype))
            sort_keys = []
            for o in order_items:
                cexpr, _ = self.compile_expr(o.expr, frames)
                sort_keys.append(P.SortKey(cexpr, o.descending))

        if sort_keys:
            node = P.Sort(node, sort_keys, node.schema)

        names = []
        exprs = []
        types = []
        for item, cexpr, ctype in proj_pairs:
            if item.alias:
                name = item.alias
            elif isinstance(item.expr, ast.ColumnRef):
                name = item.expr.name
            else:
                name = ast.print_expr(item.expr)
            names.append(name)
            exprs.append(cexpr)
            types.append(ctype if ctype in ("integer", "real", "text", "boolean") else "any")
        schema = tuple(Column(n, t) for n, t in zip(names, types))
        node = P.Project(node, exprs, schema)

        if query.distinct:
            node = P.Distinct(node, node.schema)
        if query.limit is not None:
            node = P.Limit(node, query.limit, node.schema)
        return node

    def _lower_match(self, clause: ast.MatchClause, node: P.Plan,
                     frames: list[_Frame]) -> tuple[P.Plan, _Frame]:
        frame = frames[-1]
        resolved = self.resolve_column(frames[-1:], ast.ColumnRef(None, clause.column, span=clause.span))
        symbol_index = resolved[1] if resolved else 0

        order_index = None
        point = self._savepoint()
        ts = self.resolve_column(frames[-1:], ast.ColumnRef(None, "timestep", span=clause.span))
        if self._rollback(point) or ts is None:
            order_index = None
        else:
            order_index = ts[1]

        try:
            nfa = compile_pattern(clause.pattern)
        except PatternError as exc:
            self.err(clause.span, "bad-pattern", str(exc))
            nfa = compile_pattern("__never__")

        schema = (Column("mg", "integer"),) + node.schema
        matched = P.MatchOp(node, symbol_index, order_index, clause.pattern, nfa, schema)

        new_frame = _Frame()
        new_frame.add_table("", [_ScopeColumn("mg", "integer", False)])
        for t in frame.tables:
            new_frame.add_table(t.display, t.columns)
        return matched, new_frame

    def _lower_grouped(self, query: ast.SelectQuery, order_items, node: P.Plan,
                       frames: list[_Frame]):
        group_specs = []  # (ast_expr, cexpr, type)
        for g in query.group_by:
            if ast.contains_aggregate(g):
                self.err(query.span, "misplaced-aggregate", "aggregates are not allowed in GROUP BY")
                continue
            cexpr, ctype = self.compile_expr(g, frames)
            group_specs.append((g, cexpr, ctype))

        agg_specs = []  # (ast_call, AggSpec, type)

        def note_aggregate(call: ast.FuncCall) -> None:
            for seen, _, _ in agg_specs:
                if seen == call:
                    return
            func = call.name.lower()
            arg = None
            atype = "any"
            if call.star:
                if func != "count":
                    self.err(call.span, "arity", f"{call.name}(*) is only valid for COUNT")
            elif len(call.args) != 1:
                self.err(call.span, "arity", f"{call.name}() takes exactly one argument")
            else:
                if ast.contains_aggregate(call.args[0]):
                    self.err(call.span, "misplaced-aggregate", "aggregates cannot nest")
                arg, atype = self.compile_expr(call.args[0], frames)
                if func in ("sum", "avg") and atype not in _NUMERIC + _WILD:
                    self.err(call.span, "type-mismatch", f"{call.name}() needs a numeric argument, got {atype}")
            if func == "count":
                rtype = "integer"
            elif func == "avg":
                rtype = "real"
            elif func == "sum":
                rtype = atype if atype in _NUMERIC else "any"
            else:
                rtype = atype
            agg_specs.append((call, P.AggSpec(func, arg), rtype))

        def walk(e) -> None:
            if ast.is_aggregate_call(e):
                note_aggregate(e)
                return
            if isinstance(e, ast.Unary):
                walk(e.operand)
            elif isinstance(e, ast.Binary):
                walk(e.left)
                walk(e.right)
            elif isinstance(e, ast.FuncCall):
                for a in e.args:
                    walk(a)
            elif isinstance(e, ast.InList):
                walk(e.expr)
                for i in e.items:
                    walk(i)
            elif isinstance(e, ast.InQuery):
                walk(e.expr)

        for item in query.projection:
            if isinstance(item, ast.Projection):
                walk(item.expr)
        for o in order_items:
            walk(o.expr)

        schema = tuple(
            [Column(ast.print_expr(g), t if t in ("integer", "real", "text", "boolean") else "any")
             for g, _, t in group_specs]
            + [Column(ast.print_expr(c), t if t in ("integer", "real", "text", "boolean") else "any")
               for c, _, t in agg_specs]
        )
        agg_node = P.Aggregate(node, [c for _, c, _ in group_specs],
                               [s for _, s, _ in agg_specs], schema)
        n_groups = len(group_specs)
        outer = frames[:-1]

        def translate(e: ast.Expr) -> tuple[P.CExpr, str]:
            # a whole expression equal to a GROUP BY expression becomes a
            # reference to that group column
            if not ast.contains_aggregate(e):
                point = self._savepoint()
                cexpr, ctype = self.compile_expr(e, frames)
                if not self._rollback(point):
                    for i, (_, gexpr, gtype) in enumerate(group_specs):
                        if cexpr == gexpr:
                            return P.Col(i), gtype
            if ast.is_aggregate_call(e):
                for j, (seen, _, rtype) in enumerate(agg_specs):
                    if seen == e:
                        return P.Col(n_groups + j), rtype
            if isinstance(e, ast.Literal):
                return P.Lit(e.value), e.kind
            if isinstance(e, ast.Unary):
                op_map = {"-": "neg", "NOT": "not", "IS NULL": "isnull", "IS NOT NULL": "notnull"}
                inner, itype = translate(e.operand)
                rtype = "boolean" if e.op != "-" else (itype if itype in _NUMERIC else "any")
                return P.Unary(op_map[e.op], inner), rtype
            if isinstance(e, ast.Binary):
                left, lt = translate(e.left)
                right, rt = translate(e.right)
                if e.op in ("+", "-", "*", "/", "%"):
                    rtype = "integer" if (lt, rt) == ("integer", "integer") else (
                        "real" if {lt, rt} <= set(_NUMERIC) else "any")
                    return P.Binary(e.op, left, right), rtype
                if e.op in ("AND", "OR"):
                    return P.Binary(e.op.lower(), left, right), "boolean"
                return P.Binary(e.op, left, right), "boolean"
            if isinstance(e, ast.FuncCall) and e.name.lower() == "coalesce":
                parts = [translate(a) for a in e.args]
                rtype = next((t for _, t in parts if t not in _WILD), "any")
                return P.Coalesce([c for c, _ in parts]), rtype
            if isinstance(e, ast.FuncCall):
                entry = self.functions.lookup(e.name)
                if entry is None:
                    self.err(e.span, "unknown-function", f"unknown function {e.name!r}")
                    return P.Lit(None), "any"
                return P.Call(e.name.lower(), [translate(a)[0] for a in e.args]), entry[2]
            if isinstance(e, ast.InList):
                inner, _ = translate(e.expr)
                return P.InList(inner, [translate(i)[0] for i in e.items], e.negated), "boolean"
            if isinstance(e, ast.InQuery):
                inner, _ = translate(e.expr)
                return P.InQuery(inner, self.lower_select(e.query, outer), e.negated), "boolean"
            if isinstance(e, ast.Exists):
                return P.Exists(self.lower_select(e.query, outer), e.negated), "boolean"
            if isinstance(e, ast.ScalarQuery):
                sub = self.lower_select(e.query, outer)
                if len(sub.schema) != 1:
                    self.err(e.span, "arity", "scalar subquery must project exactly one column")
                    return P.Lit(None), "any"
                return P.Scalar(sub), sub.schema[0].type
            if isinstance(e, ast.ColumnRef):
                self.err(e.span, "ungrouped-column",
                         f"column {e.table + '.' if e.table else ''}{e.name} must appear in GROUP BY or inside an aggregate")
                return P.Lit(None), "any"
            raise TypeError(f"not an expression: {e!r}")

        return agg_node, translate

    # -- phase 5: views, constraints, programs

    def compile_views(self, deps: dict[str, set[str]]) -> list[str]:
        try:
            topo = dependency_order(deps, self.view_decl)
        except ValueError as exc:
            span = self.view_defs[self.view_decl[0]].span if self.view_decl else None
            self.err(span, "cyclic-views", str(exc))
            topo = self.view_decl  # best effort so later errors still surface

        for key in topo:
            stmt = self.view_defs[key]
            self.current_reads = set()
            desugared = desugar_latest(stmt.query)
            node = self.lower_select(desugared, [])
            seen = set()
            for col in node.schema:
                low = col.name.lower()
                if low in seen:
                    self.err(stmt.span, "duplicate-column",
                             f"view {stmt.name!r} projects column {col.name!r} twice; add an alias")
                seen.add(low)
            checks = self._compile_checks(stmt.checks, stmt.name, node.schema)
            kind = "output" if isinstance(stmt, ast.OutputDef) else "view"
            self.views[key] = CatalogView(
                stmt.name, kind, desugared, node, node.schema,
                checks, sorted(self.current_reads),
            )
        return topo

    def _compile_checks(self, checks: list[ast.Expr], owner: str,
                        schema: tuple[Column, ...]) -> list[P.CExpr]:
        compiled = []
        for chk in checks:
            if self._has_subquery(chk):
                self.err(getattr(chk, "span", None), "check-subquery",
                         "CHECK expressions may only reference columns of the defining relation")
                continue
            frame = _Frame()
            frame.add_table(owner, [_ScopeColumn(c.name, c.type, False) for c in schema])
            desugared = _desugar_expr(chk)
            cexpr, ctype = self.compile_expr(desugared, [frame])
            if ctype not in ("boolean",) + _WILD:
                self.err(getattr(chk, "span", None), "type-mismatch",
                         f"CHECK expression is {ctype}, not boolean")
            compiled.append(cexpr)
        return compiled

    def _has_subquery(self, e) -> bool:
        if isinstance(e, (ast.InQuery, ast.Exists, ast.ScalarQuery)):
            return True
        if isinstance(e, ast.Unary):
            return self._has_subquery(e.operand)
        if isinstance(e, ast.Binary):
            return self._has_subquery(e.left) or self._has_subquery(e.right)
        if isinstance(e, ast.FuncCall):
            return any(self._has_subquery(a) for a in e.args)
        if isinstance(e, ast.InList):
            return self._has_subquery(e.expr) or any(self._has_subquery(i) for i in e.items)
        return False

    def compile_table_constraints(self) -> None:
        for stmt in self.program.statements:
            if not isinstance(stmt, (ast.InputDef, ast.HistoryTableDef)):
                continue
            entry = self.tables.get(stmt.name.lower())
            if entry is None:
                continue
            for i, cdef in enumerate(stmt.columns):
                if cdef.not_null:
                    entry.constraints.append(TableConstraint(
                        "not_null", i, None, f"NOT NULL {cdef.name}"))
                if cdef.unique:
                    entry.constraints.append(TableConstraint(
                        "unique", i, None, f"UNIQUE {cdef.name}"))
                for chk in cdef.checks:
                    compiled = self._compile_checks([chk], stmt.name, entry.schema)
                    for cexpr in compiled:
                        entry.constraints.append(TableConstraint(
                            "check", None, cexpr, f"CHECK ({ast.print_expr(chk)})"))

    def compile_programs(self) -> list[CatalogProgram]:
        programs = []
        for stmt in self.program.statements:
            if not isinstance(stmt, ast.StateProgramDef):
                continue
            after = None
            if stmt.after is not None:
                after = []
                for name in stmt.after:
                    entry = self.tables.get(name.lower())
                    if entry is None or entry.kind != "input":
                        self.err(stmt.span, "bad-after",
                                 f"AFTER names {name!r}, which is not an input table")
                    else:
                        after.append(name.lower())
            inserts = []
            for ins in stmt.body:
                compiled = self._compile_insert(ins)
                if compiled is not None:
                    inserts.append(compiled)
            programs.append(CatalogProgram(after, inserts))
        return programs

    def _compile_insert(self, ins: ast.InsertStatement) -> Optional[CompiledInsert]:
        entry = self.tables.get(ins.table.lower())
        if entry is None:
            if ins.table.lower() in self.views:
                self.err(ins.span, "insert-into-view", f"cannot INSERT into view {ins.table!r}")
            else:
                self.err(ins.span, "unknown-relation", f"unknown table {ins.table!r}")
            return None
        if entry.kind == "input":
            self.err(ins.span, "insert-into-input",
                     f"{ins.table!r} is an input table; programs may only write history tables")
            return None
        if entry.kind == "static":
            self.err(ins.span, "insert-into-static",
                     f"{ins.table!r} is a static table and cannot be written")
            return None

        indices = []
        seen = set()
        user = {c.name.lower(): i for i, c in enumerate(entry.user_columns())}
        for name in ins.columns:
            low = name.lower()
            if low in IMPLICIT_NAMES:
                self.err(ins.span, "reserved-column",
                         f"column {name!r} is maintained by the engine and cannot be inserted")
                indices.append(0)
                continue
            if low not in user:
                self.err(ins.span, "unknown-column", f"no column {name!r} in {ins.table!r}")
                indices.append(0)
                continue
            if low in seen:
                self.err(ins.span, "duplicate-column", f"column {name!r} listed twice")
            seen.add(low)
            indices.append(user[low])

        col_types = [entry.user_columns()[i].type for i in indices]

        if ins.rows is not None:
            rows = []
            for row in ins.rows:
                if len(row) != len(ins.columns):
                    self.err(ins.span, "arity",
                             f"INSERT names {len(ins.columns)} columns but the row has {len(row)} values")
                compiled_row = []
                for value, ctype in zip(row, col_types):
                    cexpr, vtype = self.compile_expr(_desugar_expr(value), [])
                    self.assignable(vtype, ctype, ins.span, f"INSERT into {ins.table}")
                    compiled_row.append(cexpr)
                rows.append(compiled_row)
            return CompiledInsert(entry.name, indices, rows, None)

        node = self.lower_select(desugar_latest(ins.query), [])
        if len(node.schema) != len(ins.columns):
            self.err(ins.span, "arity",
                     f"INSERT names {len(ins.columns)} columns but the query projects {len(node.schema)}")
        for col, ctype in zip(node.schema, col_types):
            self.assignable(col.type, ctype, ins.span, f"INSERT into {ins.table}")
        return CompiledInsert(entry.name, indices, None, node)

    # -- entry point

    def run(self) -> Catalog:
        self.collect_relations()
        deps = self.check_references()
        view_order = self.compile_views(deps)
        self.compile_table_constraints()
        programs = self.compile_programs()
        if self.errors:
            raise CompileFailure(self.errors, self.program.source_name)
        order = [self.views[k].name for k in view_order]
        return Catalog(
            source_name=self.program.source_name,
            tables=self.tables,
            views=self.views,
            inputs=self.inputs,
            outputs=self.outputs,
            view_order=order,
            programs=programs,
            functions=self.functions,
        )


def validate(program: ast.Program, statics=(), functions: FunctionRegistry | None = None) -> Catalog:
    """Validate and lower a program. statics is an iterable of
    (name, [Column, ...]) pairs for externally loaded tables. Raises
    CompileFailure carrying every SemanticError found."""
    return _Compiler(program, statics, functions).run()


def lower_select(query: ast.SelectQuery, catalog: Catalog) -> P.Plan:
    """Lower one standalone query against an existing catalog."""
    compiler = _Compiler(ast.Program([], catalog.source_name), (), catalog.functions)
    compiler.tables = catalog.tables
    compiler.views = catalog.views
    node = compiler.lower_select(desugar_latest(query), [])
    if compiler.errors:
        raise CompileFailure(compiler.errors, catalog.source_name)
    return node
