"""Tokenizer for `.campl` source text.

Plain UTF-8 with `--` line comments.  Indentation is significant, so the
tokens carry 1-based line/column positions and the parser applies the
offside rule from them.  Tabs are rejected outright; only spaces may
shape the layout.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Pos

KEYWORDS = frozenset({
    "proc", "protocol", "coprotocol", "do", "on", "of", "as", "into",
    "put", "get", "hput", "hcase", "close", "halt", "fork", "split",
    "plug", "race", "use", "store", "neg",
})

KW = "kw"
IDENT = "ident"
INT = "int"
STRING = "string"
CHARLIT = "char"
OP = "op"
EOF = "eof"


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def pos(self) -> Pos:
        return Pos(self.line, self.col)

    def __repr__(self) -> str:
        return f"{self.kind}({self.text!r})@{self.line}:{self.col}"


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col

    @property
    def pos(self) -> Pos:
        return Pos(self.line, self.col)


def _is_ident_start(c: str) -> bool:
    return c.isascii() and (c.isalpha() or c == "_")


def _is_ident_char(c: str) -> bool:
    return c.isascii() and (c.isalnum() or c == "_")


def tokenize(source: str) -> list[Token]:
    """Tokenize `source`, discarding comments.  Raises LexError with a
    position for tabs, unterminated literals, and stray characters."""
    src = source.replace("\r\n", "\n").replace("\r", "\n")
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(src)

    def error(msg: str, l: int | None = None, c: int | None = None):
        raise LexError(msg, l if l is not None else line,
                       c if c is not None else col)

    while i < n:
        c = src[i]
        if c == "\t":
            error("tab character; indent with spaces")
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c == " ":
            i += 1
            col += 1
            continue
        if c == "-" and i + 1 < n and src[i + 1] == "-":
            while i < n and src[i] != "\n":
                i += 1
            continue

        start_line, start_col = line, col

        if c == "-" and i + 1 < n and src[i + 1] == ">":
            toks.append(Token(OP, "->", start_line, start_col))
            i += 2
            col += 2
            continue
        if c == "-" and i + 1 < n and src[i + 1].isdigit():
            j = i + 1
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token(INT, src[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token(INT, src[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(src[j]):
                j += 1
            text = src[i:j]
            kind = KW if text in KEYWORDS else IDENT
            toks.append(Token(kind, text, start_line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            value, i, col = _scan_string(src, i, line, col)
            toks.append(Token(STRING, value, start_line, start_col))
            continue
        if c == "'":
            value, i, col = _scan_char(src, i, line, col)
            toks.append(Token(CHARLIT, value, start_line, start_col))
            continue
        if c == "(":
            if src[i:i + 3] == "(*)":
                toks.append(Token(OP, "(*)", start_line, start_col))
                i += 3
                col += 3
                continue
            if src[i:i + 3] == "(+)":
                toks.append(Token(OP, "(+)", start_line, start_col))
                i += 3
                col += 3
                continue
            toks.append(Token(OP, "(", start_line, start_col))
            i += 1
            col += 1
            continue
        if c == "|":
            if src[i:i + 3] == "|=|":
                toks.append(Token(OP, "|=|", start_line, start_col))
                i += 3
                col += 3
                continue
            toks.append(Token(OP, "|", start_line, start_col))
            i += 1
            col += 1
            continue
        if c == "=":
            if i + 1 < n and src[i + 1] == ">":
                toks.append(Token(OP, "=>", start_line, start_col))
                i += 2
                col += 2
                continue
            toks.append(Token(OP, "=", start_line, start_col))
            i += 1
            col += 1
            continue
        if c == ":":
            if i + 1 < n and src[i + 1] == ":":
                toks.append(Token(OP, "::", start_line, start_col))
                i += 2
                col += 2
                continue
            error("expected '::'")
        if c in ")],[":
            toks.append(Token(OP, c, start_line, start_col))
            i += 1
            col += 1
            continue
        if c == ",":
            toks.append(Token(OP, ",", start_line, start_col))
            i += 1
            col += 1
            continue
        error(f"unexpected character {c!r}")

    toks.append(Token(EOF, "", line, 0))
    return toks


_ESCAPES = {"n": "\n", '"': '"', "'": "'", "\\": "\\"}


def _scan_string(src: str, i: int, line: int, col: int):
    n = len(src)
    j = i + 1
    c2 = col + 1
    out: list[str] = []
    while j < n:
        c = src[j]
        if c == "\n":
            raise LexError("unterminated string literal", line, col)
        if c == "\t":
            raise LexError("tab character; indent with spaces", line, c2)
        if c == "\\":
            if j + 1 >= n or src[j + 1] not in _ESCAPES:
                raise LexError("bad escape in string literal", line, c2)
            out.append(_ESCAPES[src[j + 1]])
            j += 2
            c2 += 2
            continue
        if c == '"':
            return "".join(out), j + 1, c2 + 1
        out.append(c)
        j += 1
        c2 += 1
    raise LexError("unterminated string literal", line, col)


def _scan_char(src: str, i: int, line: int, col: int):
    n = len(src)
    j = i + 1
    c2 = col + 1
    if j >= n or src[j] == "\n":
        raise LexError("unterminated character literal", line, col)
    if src[j] == "\\":
        if j + 1 >= n or src[j + 1] not in _ESCAPES:
            raise LexError("bad escape in character literal", line, c2)
        value = _ESCAPES[src[j + 1]]
        j += 2
        c2 += 2
    else:
        value = src[j]
        j += 1
        c2 += 1
    if j >= n or src[j] != "'":
        raise LexError("unterminated character literal", line, col)
    return value, j + 1, c2 + 1
