"""State management for interactive applications as queries over an
append-only event history.

The usual entry point is :func:`load`, which compiles a program and returns
a live :class:`Engine`:

    engine = diel.load(program_text, statics=[("tweets", csv_text)])
    engine.bind_output("hourDistOutput", redraw)
    engine.ingest(diel.Event("brushEvent", {...}, wallclock_ms))
"""
from .database import Column, Relation
from .errors import (
    CompileFailure,
    ConstraintViolation,
    DielError,
    EvalError,
    ParseError,
    PatternError,
    ReentrantIngest,
    SemanticError,
    StreamError,
    UnknownInput,
    UnknownOutput,
    Violation,
)
from .runtime import Engine, Event, IngestResult, LogEntry, load

__all__ = [
    "Column",
    "CompileFailure",
    "ConstraintViolation",
    "DielError",
    "Engine",
    "EvalError",
    "Event",
    "IngestResult",
    "LogEntry",
    "ParseError",
    "PatternError",
    "ReentrantIngest",
    "Relation",
    "SemanticError",
    "StreamError",
    "UnknownInput",
    "UnknownOutput",
    "Violation",
    "load",
]

__version__ = "0.1.0"
