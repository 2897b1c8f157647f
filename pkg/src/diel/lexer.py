"""Tokenizer.

Keywords are case-insensitive; identifiers keep their spelling. String
literals are single-quoted with '' as the escape. '--' starts a comment
that runs to end of line.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError

KEYWORDS = {
    "create", "input", "table", "view", "output", "program", "after",
    "begin", "end", "insert", "into", "values", "select", "distinct",
    "from", "where", "group", "order", "by", "asc", "desc", "limit",
    "join", "on", "as", "latest", "match", "and", "or", "not", "in",
    "exists", "is", "null", "true", "false", "check", "unique",
    "integer", "int", "real", "text", "boolean", "bool",
}

PUNCT = ("<=", ">=", "!=", "<>", "(", ")", ",", ";", ".", "=", "<", ">",
         "+", "-", "*", "/", "%")


@dataclass(frozen=True)
class Token:
    type: str   # 'ident' | 'keyword' | 'integer' | 'real' | 'string' | 'punct' | 'eof'
    text: str   # raw spelling; keywords lowercased, '<>' normalised to '!='
    line: int
    column: int
    start: int
    end: int


def tokenize(text: str, source_name: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)

    def error(message: str) -> ParseError:
        return ParseError(message, line, pos - line_start + 1,
                          found=text[pos:pos + 1], source_name=source_name)

    while pos < n:
        ch = text[pos]
        if ch == "\n":
            pos += 1
            line += 1
            line_start = pos
            continue
        if ch in " \t\r":
            pos += 1
            continue
        if text.startswith("--", pos):
            while pos < n and text[pos] != "\n":
                pos += 1
            continue

        col = pos - line_start + 1
        start = pos

        if ch == "'":
            pos += 1
            chunks = []
            while True:
                if pos >= n:
                    raise ParseError("unterminated string literal", line, col,
                                     source_name=source_name)
                c = text[pos]
                if c == "'":
                    if text.startswith("''", pos):
                        chunks.append("'")
                        pos += 2
                        continue
                    pos += 1
                    break
                if c == "\n":
                    raise ParseError("unterminated string literal", line, col,
                                     source_name=source_name)
                chunks.append(c)
                pos += 1
            tokens.append(Token("string", "".join(chunks), line, col, start, pos))
            continue

        if ch.isdigit() or (ch == "." and pos + 1 < n and text[pos + 1].isdigit()):
            pos += 1
            is_real = ch == "."
            while pos < n and text[pos].isdigit():
                pos += 1
            if pos < n and text[pos] == "." and not is_real:
                is_real = True
                pos += 1
                while pos < n and text[pos].isdigit():
                    pos += 1
            if pos < n and text[pos] in "eE":
                peek = pos + 1
                if peek < n and text[peek] in "+-":
                    peek += 1
                if peek < n and text[peek].isdigit():
                    is_real = True
                    pos = peek
                    while pos < n and text[pos].isdigit():
                        pos += 1
            tokens.append(Token("real" if is_real else "integer",
                                text[start:pos], line, col, start, pos))
            continue

        if ch.isalpha() or ch == "_":
            pos += 1
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                pos += 1
            word = text[start:pos]
            if word.lower() in KEYWORDS:
                tokens.append(Token("keyword", word.lower(), line, col, start, pos))
            else:
                tokens.append(Token("ident", word, line, col, start, pos))
            continue

        for p in PUNCT:
            if text.startswith(p, pos):
                pos += len(p)
                tokens.append(Token("punct", "!=" if p == "<>" else p,
                                    line, col, start, pos))
                break
        else:
            raise error(f"unexpected character {ch!r}")

    tokens.append(Token("eof", "", line, n - line_start + 1, n, n))
    return tokens
