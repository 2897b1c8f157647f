"""Error types shared across the engine.

Every diagnostic that points at program text carries a line/column pair so
the CLI can render a caret under the offending token.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class DielError(Exception):
    """Base class for all errors raised by this package."""


@dataclass
class ParseError(DielError):
    message: str
    line: int
    column: int
    expected: frozenset[str] = field(default_factory=frozenset)
    found: str = ""
    source_name: str = "<input>"

    def __str__(self) -> str:
        return f"{self.source_name}:{self.line}:{self.column}: {self.message}"


@dataclass
class SemanticError:
    """One validation failure. Not an exception; failures are collected."""

    category: str
    message: str
    line: int
    column: int

    def format(self, source_name: str = "<input>") -> str:
        return f"{source_name}:{self.line}:{self.column}: {self.message} [{self.category}]"


class CompileFailure(DielError):
    """Raised when validation finds one or more semantic errors."""

    def __init__(self, errors: list[SemanticError], source_name: str = "<input>"):
        self.errors = errors
        self.source_name = source_name
        super().__init__("; ".join(e.format(source_name) for e in errors))


class EvalError(DielError):
    """Runtime failure while evaluating a plan (e.g. scalar subquery cardinality)."""


class StreamError(DielError):
    """A trace or snapshot stream is malformed. Carries the line number."""


class PatternError(DielError):
    """Malformed row pattern."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"pattern error at offset {position}: {message}")


class DuplicateFunction(DielError):
    """A scalar function name was registered twice."""


@dataclass
class Violation:
    """One constraint violation observed while applying an event."""

    table: str
    constraint: str
    row: str

    def __str__(self) -> str:
        return f"{self.table}: {self.constraint} violated by row {self.row}"


class ConstraintViolation(DielError):
    """Dev-mode signal that an event violated a declared constraint."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class UnknownInput(DielError):
    """An event named an input table that is not declared."""


class UnknownOutput(DielError):
    """A binding or query named a view or output that is not declared."""


class ReentrantIngest(DielError):
    """An output callback attempted to feed a new event into the engine."""


def render_caret(source: str, line: int, column: int) -> str:
    """The offending source line with a caret under the column, or "" when
    the position falls outside the text (e.g. errors at end of input)."""
    lines = source.splitlines()
    if not 1 <= line <= len(lines):
        return ""
    text = lines[line - 1]
    return text + "\n" + " " * (column - 1) + "^"
