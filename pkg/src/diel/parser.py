"""Recursive-descent parser producing the syntax tree.

Every helper leaves the cursor on the first unconsumed token. Errors carry
the line/column of the offending token plus the set of tokens that would
have been accepted there.
"""
from __future__ import annotations

from . import ast
from .errors import ParseError
from .lexer import Token, tokenize

_TYPE_NAMES = {
    "integer": "integer",
    "int": "integer",
    "real": "real",
    "text": "text",
    "boolean": "boolean",
    "bool": "boolean",
}

_COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")


class Parser:
    def __init__(self, text: str, source_name: str = "<input>"):
        self.text = text
        self.source_name = source_name
        self.tokens = tokenize(text, source_name)
        self.pos = 0

    # -- cursor helpers ------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type != "eof":
            self.pos += 1
        return tok

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.type == "keyword" and tok.text in words

    def at_punct(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.type == "punct" and tok.text in texts

    def match_keyword(self, *words: str) -> Token | None:
        if self.at_keyword(*words):
            return self.advance()
        return None

    def match_punct(self, *texts: str) -> Token | None:
        if self.at_punct(*texts):
            return self.advance()
        return None

    def fail(self, *expected: str):
        tok = self.peek()
        found = tok.text if tok.type != "eof" else "end of input"
        if len(expected) == 1:
            what = expected[0]
        else:
            what = "one of " + ", ".join(expected)
        raise ParseError(
            f"expected {what}, found {found!r}",
            tok.line, tok.column,
            expected=frozenset(expected), found=found,
            source_name=self.source_name,
        )

    def expect_keyword(self, word: str) -> Token:
        tok = self.match_keyword(word)
        if tok is None:
            self.fail(word.upper())
        return tok

    def expect_punct(self, text: str) -> Token:
        tok = self.match_punct(text)
        if tok is None:
            self.fail(f"'{text}'")
        return tok

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.type != "ident":
            self.fail(what)
        return self.advance()

    def span_from(self, start: Token) -> ast.Span:
        last = self.tokens[self.pos - 1] if self.pos > 0 else start
        return ast.Span(start.line, start.column, start.start, max(last.end, start.end))

    # -- program -------------------------------------------------------

    def parse_program(self) -> ast.Program:
        statements = []
        while self.peek().type != "eof":
            statements.append(self.parse_statement())
        return ast.Program(statements, source_name=self.source_name)

    def parse_statement(self) -> ast.Statement:
        start = self.peek()
        self.expect_keyword("create")
        if self.match_keyword("input"):
            stmt = self._finish_table_def(ast.InputDef, start)
        elif self.match_keyword("table"):
            stmt = self._finish_table_def(ast.HistoryTableDef, start)
        elif self.match_keyword("view"):
            stmt = self._finish_view_def(ast.ViewDef, start)
        elif self.match_keyword("output"):
            stmt = self._finish_view_def(ast.OutputDef, start)
        elif self.match_keyword("program"):
            stmt = self._finish_program_def(start)
        else:
            self.fail("INPUT", "TABLE", "VIEW", "OUTPUT", "PROGRAM")
        return stmt

    def _finish_table_def(self, cls, start: Token):
        name = self.expect_ident("table name").text
        self.expect_punct("(")
        columns = []
        if not self.at_punct(")"):
            columns.append(self.parse_column_def())
            while self.match_punct(","):
                columns.append(self.parse_column_def())
        self.expect_punct(")")
        self.expect_punct(";")
        return cls(name, columns, span=self.span_from(start))

    def parse_column_def(self) -> ast.ColumnDef:
        start = self.peek()
        name = self.expect_ident("column name").text
        tok = self.peek()
        if tok.type != "keyword" or tok.text not in _TYPE_NAMES:
            self.fail("INTEGER", "REAL", "TEXT", "BOOLEAN")
        self.advance()
        col = ast.ColumnDef(name, _TYPE_NAMES[tok.text])
        while True:
            if self.match_keyword("not"):
                self.expect_keyword("null")
                col.not_null = True
            elif self.match_keyword("unique"):
                col.unique = True
            elif self.match_keyword("check"):
                self.expect_punct("(")
                col.checks.append(self.parse_expr())
                self.expect_punct(")")
            else:
                break
        col.span = self.span_from(start)
        return col

    def _finish_view_def(self, cls, start: Token):
        name = self.expect_ident("view name").text
        self.expect_keyword("as")
        query = self.parse_select()
        checks = []
        while self.match_keyword("check"):
            self.expect_punct("(")
            checks.append(self.parse_expr())
            self.expect_punct(")")
        self.expect_punct(";")
        return cls(name, query, checks, span=self.span_from(start))

    def _finish_program_def(self, start: Token) -> ast.StateProgramDef:
        after = None
        if self.match_keyword("after"):
            after = []
            if self.match_punct("("):
                after.append(self.expect_ident("input name").text)
                while self.match_punct(","):
                    after.append(self.expect_ident("input name").text)
                self.expect_punct(")")
            else:
                after.append(self.expect_ident("input name").text)
        self.expect_keyword("begin")
        body = []
        while not self.at_keyword("end"):
            body.append(self.parse_insert())
        self.expect_keyword("end")
        self.expect_punct(";")
        return ast.StateProgramDef(after, body, span=self.span_from(start))

    def parse_insert(self) -> ast.InsertStatement:
        start = self.peek()
        self.expect_keyword("insert")
        self.expect_keyword("into")
        table = self.expect_ident("table name").text
        self.expect_punct("(")
        columns = [self.expect_ident("column name").text]
        while self.match_punct(","):
            columns.append(self.expect_ident("column name").text)
        self.expect_punct(")")
        rows = None
        query = None
        if self.match_keyword("values"):
            rows = [self._parse_value_row()]
            while self.match_punct(","):
                rows.append(self._parse_value_row())
        elif self.at_keyword("select"):
            query = self.parse_select()
        else:
            self.fail("VALUES", "SELECT")
        self.expect_punct(";")
        return ast.InsertStatement(table, columns, rows, query, span=self.span_from(start))

    def _parse_value_row(self) -> list[ast.Expr]:
        self.expect_punct("(")
        row = [self.parse_expr()]
        while self.match_punct(","):
            row.append(self.parse_expr())
        self.expect_punct(")")
        return row

    # -- queries ---------------------------------------------------------

    def parse_select(self) -> ast.SelectQuery:
        start = self.peek()
        self.expect_keyword("select")
        distinct = self.match_keyword("distinct") is not None
        projection = [self._parse_projection_item()]
        while self.match_punct(","):
            projection.append(self._parse_projection_item())
        self.expect_keyword("from")
        from_items = [ast.FromItem(self.parse_table_ref(), None)]
        while True:
            if self.match_punct(","):
                from_items.append(ast.FromItem(self.parse_table_ref(), None))
            elif self.match_keyword("join"):
                ref = self.parse_table_ref()
                self.expect_keyword("on")
                from_items.append(ast.FromItem(ref, self.parse_expr()))
            else:
                break
        where = None
        if self.match_keyword("where"):
            where = self.parse_expr()
        match = None
        if self.at_keyword("match"):
            mstart = self.advance()
            column = self.expect_ident("column name").text
            self.expect_keyword("on")
            pat = self.peek()
            if pat.type != "string":
                self.fail("pattern string")
            self.advance()
            match = ast.MatchClause(column, pat.text, span=self.span_from(mstart))
        group_by = []
        if self.match_keyword("group"):
            self.expect_keyword("by")
            group_by.append(self.parse_expr())
            while self.match_punct(","):
                group_by.append(self.parse_expr())
        order_by = []
        if self.match_keyword("order"):
            self.expect_keyword("by")
            order_by.append(self._parse_order_item())
            while self.match_punct(","):
                order_by.append(self._parse_order_item())
        limit = None
        if self.match_keyword("limit"):
            tok = self.peek()
            if tok.type != "integer":
                self.fail("integer")
            self.advance()
            limit = int(tok.text)
        return ast.SelectQuery(distinct, projection, from_items, where, match,
                               group_by, order_by, limit, span=self.span_from(start))

    def _parse_projection_item(self):
        start = self.peek()
        if self.match_punct("*"):
            return ast.Star(span=self.span_from(start))
        expr = self.parse_expr()
        alias = None
        if self.match_keyword("as"):
            alias = self.expect_ident("alias").text
        return ast.Projection(expr, alias, span=self.span_from(start))

    def parse_table_ref(self) -> ast.TableRef:
        start = self.peek()
        latest = self.match_keyword("latest") is not None
        name = self.expect_ident("table name").text
        alias = None
        if self.match_keyword("as"):
            alias = self.expect_ident("alias").text
        elif self.peek().type == "ident":
            alias = self.advance().text
        return ast.TableRef(name, alias, latest, span=self.span_from(start))

    def _parse_order_item(self) -> ast.OrderItem:
        start = self.peek()
        expr = self.parse_expr()
        descending = False
        if self.match_keyword("desc"):
            descending = True
        else:
            self.match_keyword("asc")
        return ast.OrderItem(expr, descending, span=self.span_from(start))

    # -- expressions ------------------------------------------------------

    def parse_expr(self) -> ast.Expr:
        return self._parse_or()

    def _parse_or(self) -> ast.Expr:
        start = self.peek()
        left = self._parse_and()
        while self.match_keyword("or"):
            right = self._parse_and()
            left = ast.Binary("OR", left, right, span=self.span_from(start))
        return left

    def _parse_and(self) -> ast.Expr:
        start = self.peek()
        left = self._parse_not()
        while self.match_keyword("and"):
            right = self._parse_not()
            left = ast.Binary("AND", left, right, span=self.span_from(start))
        return left

    def _parse_not(self) -> ast.Expr:
        start = self.peek()
        if self.at_keyword("not"):
            # NOT EXISTS folds into the Exists node so the printed form
            # parses back to the identical tree.
            if self.peek(1).type == "keyword" and self.peek(1).text == "exists":
                self.advance()
                return self._parse_exists(negated=True, start=start)
            self.advance()
            operand = self._parse_not()
            return ast.Unary("NOT", operand, span=self.span_from(start))
        return self._parse_comparison()

    def _parse_comparison(self) -> ast.Expr:
        start = self.peek()
        left = self._parse_additive()
        tok = self.peek()
        if tok.type == "punct" and tok.text in _COMPARISON_OPS:
            self.advance()
            right = self._parse_additive()
            return ast.Binary(tok.text, left, right, span=self.span_from(start))
        if self.at_keyword("is"):
            self.advance()
            negated = self.match_keyword("not") is not None
            self.expect_keyword("null")
            op = "IS NOT NULL" if negated else "IS NULL"
            return ast.Unary(op, left, span=self.span_from(start))
        negated = False
        if self.at_keyword("not") and self.peek(1).type == "keyword" and self.peek(1).text == "in":
            self.advance()
            negated = True
        if self.match_keyword("in"):
            self.expect_punct("(")
            if self.at_keyword("select"):
                query = self.parse_select()
                self.expect_punct(")")
                return ast.InQuery(left, query, negated, span=self.span_from(start))
            items = [self.parse_expr()]
            while self.match_punct(","):
                items.append(self.parse_expr())
            self.expect_punct(")")
            return ast.InList(left, items, negated, span=self.span_from(start))
        if negated:
            self.fail("IN")
        return left

    def _parse_additive(self) -> ast.Expr:
        start = self.peek()
        left = self._parse_multiplicative()
        while self.at_punct("+", "-"):
            op = self.advance().text
            right = self._parse_multiplicative()
            left = ast.Binary(op, left, right, span=self.span_from(start))
        return left

    def _parse_multiplicative(self) -> ast.Expr:
        start = self.peek()
        left = self._parse_unary()
        while self.at_punct("*", "/", "%"):
            op = self.advance().text
            right = self._parse_unary()
            left = ast.Binary(op, left, right, span=self.span_from(start))
        return left

    def _parse_unary(self) -> ast.Expr:
        start = self.peek()
        if self.match_punct("-"):
            operand = self._parse_unary()
            return ast.Unary("-", operand, span=self.span_from(start))
        return self._parse_primary()

    def _parse_exists(self, negated: bool, start: Token) -> ast.Exists:
        self.expect_keyword("exists")
        self.expect_punct("(")
        query = self.parse_select()
        self.expect_punct(")")
        return ast.Exists(query, negated, span=self.span_from(start))

    def _parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.type == "integer":
            self.advance()
            return ast.Literal("integer", int(tok.text), span=self.span_from(tok))
        if tok.type == "real":
            self.advance()
            return ast.Literal("real", float(tok.text), span=self.span_from(tok))
        if tok.type == "string":
            self.advance()
            return ast.Literal("text", tok.text, span=self.span_from(tok))
        if tok.type == "keyword":
            if tok.text == "null":
                self.advance()
                return ast.Literal("null", None, span=self.span_from(tok))
            if tok.text in ("true", "false"):
                self.advance()
                return ast.Literal("boolean", tok.text == "true", span=self.span_from(tok))
            if tok.text == "exists":
                return self._parse_exists(negated=False, start=tok)
        if tok.type == "punct" and tok.text == "(":
            self.advance()
            if self.at_keyword("select"):
                query = self.parse_select()
                self.expect_punct(")")
                return ast.ScalarQuery(query, span=self.span_from(tok))
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        if tok.type == "ident":
            self.advance()
            if self.at_punct("("):
                self.advance()
                if self.match_punct("*"):
                    self.expect_punct(")")
                    return ast.FuncCall(tok.text, [], star=True, span=self.span_from(tok))
                args = []
                if not self.at_punct(")"):
                    args.append(self.parse_expr())
                    while self.match_punct(","):
                        args.append(self.parse_expr())
                self.expect_punct(")")
                return ast.FuncCall(tok.text, args, span=self.span_from(tok))
            if self.at_punct(".") and self.peek(1).type == "ident":
                self.advance()
                member = self.advance()
                return ast.ColumnRef(tok.text, member.text, span=self.span_from(tok))
            return ast.ColumnRef(None, tok.text, span=self.span_from(tok))
        self.fail("expression")


def parse_program(text: str, source_name: str = "<input>") -> ast.Program:
    return Parser(text, source_name).parse_program()


def parse_select(text: str, source_name: str = "<input>") -> ast.SelectQuery:
    """Parse a single query; used by tests and the match tool."""
    parser = Parser(text, source_name)
    query = parser.parse_select()
    parser.match_punct(";")
    if parser.peek().type != "eof":
        parser.fail("end of input")
    return query


def format_error(err: ParseError, text: str) -> str:
    """Render a diagnostic with the offending line and a caret."""
    lines = text.split("\n")
    out = [f"{err.source_name}:{err.line}:{err.column}: {err.message}"]
    if 1 <= err.line <= len(lines):
        src = lines[err.line - 1]
        out.append("  " + src)
        out.append("  " + " " * (err.column - 1) + "^")
    return "\n".join(out)
