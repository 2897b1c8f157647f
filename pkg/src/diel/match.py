"""Row-pattern matching.

Patterns are regular expressions whose unit is a whole row value rather
than a character: symbol literals, concatenation, '|', '*', '+', '?', and
groups, where '(...)' captures and '(?:...)' does not. Matching scans a
row sequence unanchored, non-overlapping, leftmost, with greedy
quantifiers; only rows consumed inside capturing groups are reported.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .database import Column, Relation
from .errors import PatternError
from .values import render_text

_OPERATOR_CHARS = "()|*+?"


# --- pattern syntax tree ----------------------------------------------------

@dataclass
class PSymbol:
    text: str


@dataclass
class PConcat:
    parts: list


@dataclass
class PAlt:
    options: list


@dataclass
class PRepeat:
    part: object
    op: str  # * + ?


@dataclass
class PGroup:
    part: object
    capturing: bool
    index: Optional[int]  # 1-based for capturing groups


class _PatternParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.group_count = 0

    def error(self, message: str) -> PatternError:
        return PatternError(message, self.pos)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self):
        node = self.parse_alternation()
        if self.pos != len(self.text):
            raise self.error(f"unexpected {self.peek()!r}")
        if not _contains_symbol(node):
            raise PatternError("pattern has no symbols", 0)
        return node

    def parse_alternation(self):
        options = [self.parse_concat()]
        while self.peek() == "|":
            self.pos += 1
            options.append(self.parse_concat())
        if len(options) == 1:
            return options[0]
        return PAlt(options)

    def parse_concat(self):
        parts = []
        while True:
            self._skip_ws()
            ch = self.peek()
            if ch in ("", "|", ")"):
                break
            parts.append(self.parse_repeat())
        if not parts:
            raise self.error("empty branch")
        if len(parts) == 1:
            return parts[0]
        return PConcat(parts)

    def parse_repeat(self):
        node = self.parse_atom()
        self._skip_ws()
        if self.peek() in ("*", "+", "?"):
            op = self.peek()
            self.pos += 1
            node = PRepeat(node, op)
            if self.peek() in ("*", "+", "?"):
                raise self.error("stacked quantifiers are not supported")
        return node

    def parse_atom(self):
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            capturing = True
            index = None
            if self.text.startswith("?:", self.pos):
                self.pos += 2
                capturing = False
            else:
                self.group_count += 1
                index = self.group_count
            inner = self.parse_alternation()
            if self.peek() != ")":
                raise self.error("unbalanced '('")
            self.pos += 1
            return PGroup(inner, capturing, index)
        if ch in _OPERATOR_CHARS or ch == "":
            raise self.error(f"expected a symbol, found {ch!r}" if ch else "unexpected end of pattern")
        start = self.pos
        while self.peek() and self.peek() not in _OPERATOR_CHARS and not self.peek().isspace():
            self.pos += 1
        return PSymbol(self.text[start:self.pos])

    def _skip_ws(self):
        while self.peek().isspace():
            self.pos += 1


def _contains_symbol(node) -> bool:
    if isinstance(node, PSymbol):
        return True
    if isinstance(node, PConcat):
        return any(_contains_symbol(p) for p in node.parts)
    if isinstance(node, PAlt):
        return any(_contains_symbol(o) for o in node.options)
    if isinstance(node, (PRepeat, PGroup)):
        return _contains_symbol(node.part)
    return False


def parse_pattern(text: str):
    return _PatternParser(text).parse()


# --- Thompson construction ---------------------------------------------------

@dataclass
class Nfa:
    """States hold transition lists ordered by preference; the runner tries
    them in order, which yields the same matches as a backtracking regex
    with greedy quantifiers.

    Besides sym and eps edges there are marker edges that carry the
    bookkeeping a backtracking engine keeps on its stack: open/close record
    capture spans, and enter/iter implement zero-width protection for '*'
    and '+'. An iter edge is taken only if the repeat has advanced since its
    previous iteration started, so one trailing empty iteration can run
    (updating captures) and then the loop must stop. This reproduces what
    conventional regex engines do with quantified empty-matching bodies."""

    transitions: list = field(default_factory=list)  # per state: [(kind, arg, target)]
    start: int = 0
    accept: int = 0
    group_count: int = 0
    pattern: str = ""

    def add_state(self) -> int:
        self.transitions.append([])
        return len(self.transitions) - 1

    def add_edge(self, src: int, kind: str, arg, dst: int) -> None:
        self.transitions[src].append((kind, arg, dst))


def compile_pattern(text: str) -> Nfa:
    parser = _PatternParser(text)
    tree = parser.parse()
    nfa = Nfa(group_count=parser.group_count, pattern=text)
    next_repeat = [0]

    def build(node) -> tuple[int, int]:
        if isinstance(node, PSymbol):
            s, t = nfa.add_state(), nfa.add_state()
            nfa.add_edge(s, "sym", node.text, t)
            return s, t
        if isinstance(node, PConcat):
            first_s, prev_t = build(node.parts[0])
            for part in node.parts[1:]:
                s, t = build(part)
                nfa.add_edge(prev_t, "eps", None, s)
                prev_t = t
            return first_s, prev_t
        if isinstance(node, PAlt):
            s, t = nfa.add_state(), nfa.add_state()
            for option in node.options:
                os, ot = build(option)
                nfa.add_edge(s, "eps", None, os)
                nfa.add_edge(ot, "eps", None, t)
            return s, t
        if isinstance(node, PRepeat):
            bs, bt = build(node.part)
            s, t = nfa.add_state(), nfa.add_state()
            if node.op == "?":
                nfa.add_edge(s, "eps", None, bs)   # prefer taking the body
                nfa.add_edge(s, "eps", None, t)
                nfa.add_edge(bt, "eps", None, t)
                return s, t
            k = next_repeat[0]
            next_repeat[0] += 1
            loop = nfa.add_state()
            nfa.add_edge(loop, "iter", k, bs)      # greedy: one more iteration
            nfa.add_edge(loop, "eps", None, t)
            nfa.add_edge(bt, "eps", None, loop)
            if node.op == "*":
                nfa.add_edge(s, "enter", k, loop)
            else:  # +: the first iteration is not optional
                first = nfa.add_state()
                nfa.add_edge(first, "iter", k, bs)
                nfa.add_edge(s, "enter", k, first)
            return s, t
        if isinstance(node, PGroup):
            bs, bt = build(node.part)
            if not node.capturing:
                return bs, bt
            s, t = nfa.add_state(), nfa.add_state()
            nfa.add_edge(s, "open", node.index, bs)
            nfa.add_edge(bt, "close", node.index, t)
            return s, t
        raise TypeError(f"not a pattern node: {node!r}")

    start, accept = build(tree)
    nfa.start = start
    nfa.accept = accept
    return nfa


# --- runner -------------------------------------------------------------------

def _attempt(nfa: Nfa, symbols: list, pos: int, forbid_empty: bool = False):
    """Try to match starting exactly at pos. Returns (end, captures) of the
    first accepting path in preference order, or None. With forbid_empty
    the match must consume at least one row; the search then backtracks
    past accepting paths that stay at pos.

    Explicit-stack depth-first search so long inputs cannot overflow the
    interpreter stack. Captures and repeat positions travel as immutable
    path-local dicts, so abandoning a branch needs no undo. Every cycle in
    the graph passes an iter edge, whose guard fails once a repeat stops
    advancing, which bounds the search."""
    stack = [(nfa.start, pos, {}, {})]
    n = len(symbols)
    while stack:
        state, at, caps, last = stack.pop()
        if state == nfa.accept:
            if forbid_empty and at == pos:
                continue
            return at, caps
        for kind, arg, target in reversed(nfa.transitions[state]):
            if kind == "sym":
                if at < n and symbols[at] is not None and symbols[at] == arg:
                    stack.append((target, at + 1, caps, last))
            elif kind == "eps":
                stack.append((target, at, caps, last))
            elif kind == "open":
                nc = dict(caps)
                nc[arg] = (at, at)
                stack.append((target, at, nc, last))
            elif kind == "close":
                nc = dict(caps)
                nc[arg] = (caps[arg][0], at)
                stack.append((target, at, nc, last))
            elif kind == "enter":
                nl = dict(last)
                nl[arg] = None
                stack.append((target, at, caps, nl))
            else:  # iter: only if this repeat consumed something last time
                if last.get(arg) != at:
                    nl = dict(last)
                    nl[arg] = at
                    stack.append((target, at, caps, nl))
    return None


def find_matches(nfa: Nfa, symbols: list) -> list[tuple[int, int, dict]]:
    """All non-overlapping matches, leftmost first: (start, end, captures).

    Directly after an empty match the same position is searched once more
    with empty matches forbidden, so a non-empty match starting there is
    still found; only when that fails does scanning move one row ahead.
    Conventional regex scanners behave the same way."""
    matches = []
    pos = 0
    must_advance = False
    n = len(symbols)
    while pos <= n:
        found = _attempt(nfa, symbols, pos, forbid_empty=must_advance)
        if found is None:
            pos += 1
            must_advance = False
            continue
        end, caps = found
        matches.append((pos, end, caps))
        must_advance = end == pos
        pos = end
    return matches


def captured_rows(match: tuple[int, int, dict]) -> list[int]:
    """Row positions inside at least one capturing group, in sequence order.
    A group quantified into several iterations keeps its last span, the way
    mainstream regex engines report repeated groups."""
    _, _, caps = match
    rows = set()
    for start, end in caps.values():
        rows.update(range(start, end))
    return sorted(rows)


def run_match(relation: Relation, column: str, nfa: Nfa,
              projection: list[str] | None = None) -> Relation:
    """Match over a relation whose rows the caller has put in timestep
    order. The result schema is mg plus the projected columns; mg numbers
    the matches that contributed at least one captured row."""
    sym_idx = relation.index_of(column)
    proj_names = projection if projection is not None else relation.column_names()
    proj_idx = [relation.index_of(n) for n in proj_names]
    schema = (Column("mg", "integer"),) + tuple(relation.schema[i] for i in proj_idx)

    symbols = [
        None if row[sym_idx] is None else render_text(row[sym_idx])
        for row in relation.rows
    ]
    out_rows = []
    mg = 0
    for m in find_matches(nfa, symbols):
        rows = captured_rows(m)
        if not rows:
            continue
        for r in rows:
            src = relation.rows[r]
            out_rows.append((mg,) + tuple(src[i] for i in proj_idx))
        mg += 1
    return Relation(schema, out_rows)
