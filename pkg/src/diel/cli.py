"""Command line front door: compile and inspect programs, replay traces
into snapshot streams, diff streams, match patterns over CSV rows, and
serve an engine over WebSocket.

Exit codes: 0 success, 1 compile or invocation error, 2 dev-mode
constraint violation during a replay, 3 I/O or malformed-stream error.
"""
from __future__ import annotations

import csv
import os
import sys
from pathlib import Path

import click

from . import ast as ast_mod
from .compile import desugar_program, validate
from .database import Relation, parse_static_csv
from .errors import (
    CompileFailure,
    ConstraintViolation,
    DielError,
    ParseError,
    PatternError,
    StreamError,
    UnknownInput,
    render_caret,
)
from .jsonio import diff_snapshots, format_snapshot_line, read_snapshots, read_trace
from .match import compile_pattern, run_match
from .parser import parse_program
from .plan import format_plan
from .runtime import Engine, Event
from .values import render_text, sort_key

EXIT_COMPILE = 1
EXIT_CONSTRAINT = 2
EXIT_IO = 3


def _fail_io(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_IO)


def _read_file(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail_io(str(exc))


def _load_statics(pairs) -> list[tuple[str, str]]:
    out = []
    for pair in pairs:
        name, sep, path = pair.partition("=")
        if not sep or not name or not path:
            _fail_io(f"--static expects NAME=PATH, got {pair!r}")
        out.append((name, _read_file(path)))
    return out


def _report_compile_failure(source: str, exc: Exception):
    if isinstance(exc, ParseError):
        click.echo(str(exc), err=True)
        caret = render_caret(source, exc.line, exc.column)
        if caret:
            click.echo(caret, err=True)
    elif isinstance(exc, CompileFailure):
        for err in exc.errors:
            click.echo(err.format(exc.source_name), err=True)
            caret = render_caret(source, err.line, err.column)
            if caret:
                click.echo(caret, err=True)
    else:
        click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_COMPILE)


def _compile(source: str, source_name: str, statics: list[tuple[str, str]]):
    """Parse and validate, returning (program, catalog, static row data)."""
    program = parse_program(source, source_name)
    schemas = []
    data = {}
    for name, text in statics:
        try:
            columns, rows = parse_static_csv(name, text)
        except (ValueError, TypeError) as exc:
            _fail_io(f"static table {name}: {exc}")
        schemas.append((name, columns))
        data[name.lower()] = rows
    catalog = validate(program, schemas)
    return program, catalog, data


def _resolve_mode(flag: str) -> str:
    env = os.environ.get("DIEL_MODE")
    if env is None:
        return flag
    if env not in ("dev", "deploy"):
        _fail_io(f"DIEL_MODE must be dev or deploy, got {env!r}")
    return env


@click.group()
def main():
    """Event-log state management: queries over an append-only history."""


@main.command("compile")
@click.argument("file")
@click.option("--emit", type=click.Choice(["ast", "sql", "plan", "deps"]),
              default="sql", show_default=True,
              help="which compiled form to print")
@click.option("--static", "statics", multiple=True, metavar="NAME=PATH",
              help="CSV file backing a static table (repeatable)")
def cmd_compile(file, emit, statics):
    """Check a program and print one of its compiled forms."""
    source = _read_file(file)
    try:
        program, catalog, _ = _compile(source, file, _load_statics(statics))
    except (ParseError, CompileFailure) as exc:
        _report_compile_failure(source, exc)

    if emit == "ast":
        click.echo(ast_mod.dump(program), nl=False)
    elif emit == "sql":
        click.echo(ast_mod.print_program(desugar_program(program)), nl=False)
    elif emit == "plan":
        chunks = []
        for view in catalog.views.values():
            text = format_plan(view.plan)
            if not text.endswith("\n"):
                text += "\n"
            chunks.append(f"-- {view.name}\n{text}")
        click.echo("".join(chunks), nl=False)
    else:
        def canonical(low: str) -> str:
            if low in catalog.tables:
                return catalog.tables[low].name
            return catalog.views[low].name

        lines = []
        for view in catalog.views.values():
            for read in view.reads:
                lines.append(f"{view.name} -> {canonical(read)}")
        click.echo("".join(line + "\n" for line in lines), nl=False)


@main.command("run")
@click.argument("file")
@click.option("--trace", "trace_path", required=True, metavar="PATH",
              help="JSON-Lines event trace to replay")
@click.option("--static", "statics", multiple=True, metavar="NAME=PATH",
              help="CSV file backing a static table (repeatable)")
@click.option("--mode", type=click.Choice(["dev", "deploy"]), default="deploy",
              show_default=True, help="constraint handling (DIEL_MODE overrides)")
@click.option("--out", default="-", metavar="PATH",
              help="snapshot destination; - for stdout, a directory gets"
                   " snapshots.jsonl inside")
@click.option("--outputs", default=None, metavar="NAMES",
              help="comma-separated outputs to bind (default: all)")
def cmd_run(file, trace_path, statics, mode, out, outputs):
    """Replay a trace through a program, writing the snapshot stream."""
    mode = _resolve_mode(mode)
    source = _read_file(file)
    try:
        _, catalog, static_data = _compile(source, file, _load_statics(statics))
    except (ParseError, CompileFailure) as exc:
        _report_compile_failure(source, exc)
    try:
        entries, warnings = read_trace(_read_file(trace_path))
    except StreamError as exc:
        _fail_io(str(exc))
    for w in warnings:
        click.echo(f"warning: {w}", err=True)

    engine = Engine(catalog, mode, static_data)
    selected = catalog.outputs
    if outputs is not None:
        wanted = {n.strip().lower() for n in outputs.split(",") if n.strip()}
        known = {n.lower() for n in catalog.outputs}
        for name in wanted - known:
            click.echo(f"error: unknown output {name!r}", err=True)
            sys.exit(EXIT_COMPILE)
        selected = [n for n in catalog.outputs if n.lower() in wanted]

    pending: list[tuple[str, Relation]] = []
    for name in selected:
        engine.bind_output(name, lambda rel, _n=name: pending.append((_n, rel)))

    lines: list[str] = []
    committed = rejected = 0
    for entry in entries:
        try:
            result = engine.ingest(
                Event(entry.input_name, entry.values, entry.wallclock_ms))
        except ConstraintViolation as exc:
            click.echo(f"trace line {entry.line_number}: {exc}", err=True)
            sys.exit(EXIT_CONSTRAINT)
        except (UnknownInput, TypeError) as exc:
            _fail_io(f"trace line {entry.line_number}: {exc}")
        if result.committed:
            committed += 1
            for name, rel in pending:
                lines.append(format_snapshot_line(result.timestep, name, rel))
        else:
            rejected += 1
        pending.clear()

    text = "".join(line + "\n" for line in lines)
    if out == "-":
        click.echo(text, nl=False)
    else:
        target = Path(out)
        if target.is_dir():
            target = target / "snapshots.jsonl"
        try:
            target.write_text(text, encoding="utf-8")
        except OSError as exc:
            _fail_io(str(exc))
    click.echo(f"committed {committed} rejected {rejected}", err=True)


@main.command("diff")
@click.argument("a")
@click.argument("b")
def cmd_diff(a, b):
    """Compare two snapshot streams; exit 0 only when equivalent."""
    try:
        left = read_snapshots(_read_file(a))
        right = read_snapshots(_read_file(b))
    except StreamError as exc:
        _fail_io(str(exc))
    report = diff_snapshots(left, right)
    if report is not None:
        click.echo(report)
        sys.exit(1)


@main.command("match")
@click.argument("file")
@click.option("--pattern", required=True, help="row pattern to search for")
@click.option("--column", required=True, help="column holding the symbols")
@click.option("--order", default=None, metavar="COLUMN",
              help="sort rows by this column first (default: file order)")
@click.option("--project", default=None, metavar="NAMES",
              help="comma-separated columns to emit (default: all)")
def cmd_match(file, pattern, column, order, project):
    """Run a row pattern over CSV rows, printing captured rows as CSV."""
    try:
        schema, rows = parse_static_csv("input", _read_file(file))
    except (ValueError, TypeError) as exc:
        _fail_io(str(exc))
    try:
        nfa = compile_pattern(pattern)
    except PatternError as exc:
        click.echo(str(exc), err=True)
        caret = render_caret(pattern, 1, exc.position + 1)
        if caret:
            click.echo(caret, err=True)
        sys.exit(EXIT_COMPILE)

    relation = Relation(schema, rows)
    names = {c.name.lower(): c.name for c in schema}
    for wanted in [column] + ([order] if order else []):
        if wanted.lower() not in names:
            click.echo(f"error: no column {wanted!r}", err=True)
            sys.exit(EXIT_COMPILE)
    projection = None
    if project is not None:
        projection = []
        for n in project.split(","):
            n = n.strip()
            if n.lower() not in names:
                click.echo(f"error: no column {n!r}", err=True)
                sys.exit(EXIT_COMPILE)
            projection.append(names[n.lower()])
    if order:
        idx = relation.index_of(order)
        ordered = sorted(relation.rows, key=lambda r: sort_key(r[idx]))
        relation = Relation(schema, ordered)

    result = run_match(relation, column, nfa, projection)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(c.name for c in result.schema)
    for row in result.rows:
        writer.writerow("" if v is None else render_text(v) for v in row)


@main.command("serve")
@click.argument("file")
@click.option("--static", "statics", multiple=True, metavar="NAME=PATH",
              help="CSV file backing a static table (repeatable)")
@click.option("--mode", type=click.Choice(["dev", "deploy"]), default="deploy",
              show_default=True, help="constraint handling (DIEL_MODE overrides)")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def cmd_serve(file, statics, mode, host, port):
    """Serve the engine over WebSocket for live clients."""
    mode = _resolve_mode(mode)
    source = _read_file(file)
    try:
        _, catalog, static_data = _compile(source, file, _load_statics(statics))
    except (ParseError, CompileFailure) as exc:
        _report_compile_failure(source, exc)

    from .service import serve_forever

    engine = Engine(catalog, mode, static_data)
    try:
        serve_forever(engine, host, port)
    except OSError as exc:
        _fail_io(f"cannot bind {host}:{port}: {exc}")


if __name__ == "__main__":
    main()
