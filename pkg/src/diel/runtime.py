"""The engine: one store, one logical clock, the five-step event cycle.

Each ingested event is annotated with the next timestep, checked against
the input table's constraints, committed, run through the state programs,
and finally reflected to bound outputs whose contents changed. Any
constraint violation at any stage leaves the store and the timestep
exactly as they were before the event.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .compile import Catalog, CatalogProgram, CatalogTable, validate
from .database import Database, Relation, Table, multiset_equal, parse_static_csv
from .errors import (
    ConstraintViolation,
    ReentrantIngest,
    UnknownInput,
    UnknownOutput,
    Violation,
)
from .evaluate import Evaluator
from .parser import parse_program
from .values import coerce_event_value, values_equal

MODES = ("dev", "deploy")


@dataclass
class Event:
    input_name: str
    values: dict
    wallclock_ms: float


@dataclass
class LogEntry:
    """One committed event as recorded for replay."""
    timestep: int
    input_name: str
    values: dict
    wallclock_ms: float


@dataclass
class IngestResult:
    status: str                     # committed | rejected
    timestep: int | None = None
    changed_outputs: list[str] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)

    @property
    def committed(self) -> bool:
        return self.status == "committed"


class _Abort(Exception):
    def __init__(self, violations: list[Violation]):
        self.violations = violations


class Engine:
    def __init__(self, catalog: Catalog, mode: str = "deploy",
                 static_data: dict[str, list[tuple]] | None = None):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.catalog = catalog
        self.mode = mode
        self.timestep = 0
        self.database = Database()
        # the catalog owns the function registry so compiled plans and the
        # evaluator agree on it
        self.database.functions = catalog.functions
        for entry in catalog.tables.values():
            table = self.database.add_table(Table(entry.name, entry.kind, entry.schema))
            if entry.kind == "static":
                table.append_rows((static_data or {}).get(entry.name.lower(), []))
        self._bindings: dict[str, list] = {}
        self._cache: dict[str, Relation] = {}
        self._log: list[LogEntry] = []
        self._in_callback = False
        self._evaluator = Evaluator(self._resolve_current, catalog.functions)

    # -- evaluation plumbing

    def _resolve_current(self, name: str) -> Relation:
        """Resolve a scan against the state as it stands right now.

        View references materialize fresh on every call, so a program
        insert reading a view sees the rows earlier inserts in the same
        event already appended. View dependencies are acyclic, so the
        recursion terminates."""
        low = name.lower()
        view = self.catalog.views.get(low)
        if view is not None:
            return self._evaluator.evaluate(view.plan)
        return self.database.table(name).relation()

    def _materialize_views(self) -> dict[str, Relation]:
        """All views and outputs, dependency order, one pass."""
        done: dict[str, Relation] = {}

        def resolve(name: str) -> Relation:
            if name in done:
                return done[name]
            return self.database.table(name).relation()

        evaluator = Evaluator(resolve, self.catalog.functions)
        for name in self.catalog.view_order:
            view = self.catalog.views[name.lower()]
            rel = evaluator.evaluate(view.plan)
            done[name.lower()] = rel
        return done

    def _view_check_violations(self, views: dict[str, Relation]) -> list[Violation]:
        found = []
        for name in self.catalog.view_order:
            view = self.catalog.views[name.lower()]
            if not view.checks:
                continue
            rel = views[name.lower()]
            for chk in view.checks:
                for row in rel.rows:
                    if self._evaluator.scalar(chk, row, ()) is False:
                        found.append(Violation(view.name, "CHECK", row))
        return found

    # -- constraints

    def _row_violations(self, entry: CatalogTable, table: Table, row: tuple) -> list[Violation]:
        found = []
        for c in entry.constraints:
            if c.kind == "not_null":
                if row[c.column] is None:
                    found.append(Violation(entry.name, c.label, row))
            elif c.kind == "unique":
                v = row[c.column]
                if v is None:
                    continue  # nulls never collide, as in SQL
                for existing in table.rows:
                    if existing[c.column] is not None and values_equal(existing[c.column], v):
                        found.append(Violation(entry.name, c.label, row))
                        break
            else:
                if self._evaluator.scalar(c.expr, row, ()) is False:
                    found.append(Violation(entry.name, c.label, row))
        return found

    # -- the event cycle

    def ingest(self, event: Event) -> IngestResult:
        if self._in_callback:
            raise ReentrantIngest("ingest called from inside an output callback")
        entry = self.catalog.tables.get(event.input_name.lower())
        if entry is None or entry.kind != "input":
            raise UnknownInput(f"unknown input {event.input_name!r}")

        # step 1: tentative timestep and annotation
        ts = self.timestep + 1
        values = {k.lower(): v for k, v in event.values.items()}
        user = entry.user_columns()
        known = {c.name.lower() for c in user}
        for key in values:
            if key not in known:
                raise UnknownInput(f"input {entry.name!r} has no column {key!r}")
        row = tuple(
            coerce_event_value(values.get(c.name.lower()), c.type, f"{entry.name}.{c.name}")
            for c in user
        ) + (ts, float(event.wallclock_ms))

        # step 2: input constraints, against committed rows
        table = self.database.table(entry.name)
        violations = self._row_violations(entry, table, row)
        if violations:
            if self.mode == "dev":
                raise ConstraintViolation(violations)
            return IngestResult("rejected", violations=violations)

        # step 3: commit and advance
        saved_lengths = {t.name: len(t.rows) for t in self.database.tables()}
        table.append_rows([row])
        self.timestep = ts

        try:
            # step 4: state programs
            self._run_programs(entry.name.lower(), ts, float(event.wallclock_ms))
            # step 5: evaluate views and outputs
            views = self._materialize_views()
            bad = self._view_check_violations(views)
            if bad:
                raise _Abort(bad)
        except _Abort as abort:
            self._rollback(saved_lengths, ts - 1)
            if self.mode == "dev":
                raise ConstraintViolation(abort.violations) from None
            return IngestResult("rejected", violations=abort.violations)
        except Exception:
            # evaluation errors pass through, but never leave a half-applied event
            self._rollback(saved_lengths, ts - 1)
            raise

        self._log.append(LogEntry(
            ts, entry.name,
            {c.name: row[i] for i, c in enumerate(user)},
            float(event.wallclock_ms),
        ))

        # step 6: upcalls for changed bound outputs, declaration order
        changed = []
        for out_name in self.catalog.outputs:
            low = out_name.lower()
            if low not in self._cache:
                continue
            rel = views[low]
            if multiset_equal(rel, self._cache[low]):
                continue
            self._cache[low] = rel
            changed.append(out_name)
            self._in_callback = True
            try:
                for callback in self._bindings.get(low, []):
                    callback(rel)
            finally:
                self._in_callback = False
        return IngestResult("committed", timestep=ts, changed_outputs=changed)

    def _run_programs(self, input_low: str, ts: int, wallclock: float) -> None:
        def runs(program: CatalogProgram, want_after: bool) -> bool:
            if program.after is None:
                return not want_after
            return want_after and input_low in program.after

        for want_after in (False, True):
            for program in self.catalog.programs:
                if not runs(program, want_after):
                    continue
                for ins in program.inserts:
                    self._apply_insert(ins, ts, wallclock)

    def _apply_insert(self, ins, ts: int, wallclock: float) -> None:
        entry = self.catalog.tables[ins.table.lower()]
        table = self.database.table(ins.table)
        if ins.rows is not None:
            produced = [
                tuple(self._evaluator.scalar(e, (), ()) for e in row)
                for row in ins.rows
            ]
        else:
            produced = self._evaluator.rows(ins.plan, ())
        width = entry.user_count
        for values in produced:
            full = [None] * width
            for i, idx in enumerate(ins.column_indices):
                full[idx] = values[i]
            row = tuple(full) + (ts, wallclock)
            bad = self._row_violations(entry, table, row)
            if bad:
                raise _Abort(bad)
            table.append_rows([row])

    def _rollback(self, saved_lengths: dict[str, int], old_timestep: int) -> None:
        for t in self.database.tables():
            keep = saved_lengths.get(t.name)
            if keep is not None and len(t.rows) > keep:
                del t.rows[keep:]
        self.timestep = old_timestep

    # -- reads and bindings

    def bind_output(self, name: str, callback) -> None:
        """Snapshot the output now; the callback fires only on later changes."""
        view = self.catalog.views.get(name.lower())
        if view is None or view.kind != "output":
            raise UnknownOutput(f"unknown output {name!r}")
        low = name.lower()
        self._bindings.setdefault(low, []).append(callback)
        self._cache[low] = self._materialize_views()[low]

    def query_output(self, name: str) -> Relation:
        view = self.catalog.views.get(name.lower())
        if view is None:
            raise UnknownOutput(f"unknown view or output {name!r}")
        return self._materialize_views()[name.lower()]

    def export_log(self) -> list[LogEntry]:
        return list(self._log)


def load(program_text: str, statics: list[tuple[str, str]] = (),
         mode: str = "deploy", source_name: str = "<input>") -> Engine:
    """Parse, validate, and instantiate. statics pairs a table name with
    CSV content; the schema comes from the CSV header with inferred types.
    Raises ParseError or CompileFailure."""
    program = parse_program(program_text, source_name)
    static_schemas = []
    static_data = {}
    for name, csv_text in statics:
        columns, rows = parse_static_csv(name, csv_text)
        static_schemas.append((name, columns))
        static_data[name.lower()] = rows
    catalog = validate(program, static_schemas)
    return Engine(catalog, mode, static_data)
