"""Hand-written lexer for the MiniJS subset.

``flx_mode`` additionally recognizes the stream placeholder arrows ``->`` and
``>>`` so fluxion bodies can be re-parsed from ``.flx`` text.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import Span
from .errors import LexError

KEYWORDS = {"var", "function", "return", "if", "else", "true", "false", "null"}

# token kinds
KW = "kw"
IDENT = "ident"
NUM = "num"
STR = "str"
OP = "op"
PUNCT = "punct"
ARROW = "arrow"  # '->' or '>>', flx mode only
EOF = "eof"

_PUNCT = "(){},;:"
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"', "0": "\0"}


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    span: Span


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c in "_$"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c in "_$"


def tokenize(source: str, flx_mode: bool = False) -> list[Token]:
    """Token sequence covering ``source``; comments are discarded."""
    toks: list[Token] = []
    i, n = 0, len(source)
    line, col = 1, 1

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    def span_from(start: int, sl: int, sc: int) -> Span:
        return Span(start, i, sl, sc)

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance()
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "/":
            while i < n and source[i] != "\n":
                advance()
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "*":
            raise LexError("block comments are not supported", line, col)

        start, sl, sc = i, line, col
        if _is_ident_start(c):
            while i < n and _is_ident_char(source[i]):
                advance()
            text = source[start:i]
            toks.append(Token(KW if text in KEYWORDS else IDENT, text, span_from(start, sl, sc)))
            continue
        if c.isdigit():
            while i < n and source[i].isdigit():
                advance()
            if i < n and source[i] == "." and i + 1 < n and source[i + 1].isdigit():
                advance()
                while i < n and source[i].isdigit():
                    advance()
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    advance(j - i)
                    while i < n and source[i].isdigit():
                        advance()
            toks.append(Token(NUM, source[start:i], span_from(start, sl, sc)))
            continue
        if c in "'\"":
            quote = c
            advance()
            buf = []
            while True:
                if i >= n or source[i] == "\n":
                    raise LexError("unterminated string literal", sl, sc)
                ch = source[i]
                if ch == quote:
                    advance()
                    break
                if ch == "\\":
                    advance()
                    if i >= n:
                        raise LexError("unterminated string literal", sl, sc)
                    esc = source[i]
                    if esc not in _ESCAPES:
                        raise LexError(f"unsupported escape '\\{esc}'", line, col)
                    buf.append(_ESCAPES[esc])
                    advance()
                    continue
                buf.append(ch)
                advance()
            toks.append(Token(STR, "".join(buf), span_from(start, sl, sc)))
            continue
        if c in _PUNCT:
            advance()
            toks.append(Token(PUNCT, c, span_from(start, sl, sc)))
            continue

        two = source[i : i + 2]
        if flx_mode and two in ("->", ">>"):
            advance(2)
            toks.append(Token(ARROW, two, span_from(start, sl, sc)))
            continue
        if two in ("+=", "==", "!=", "||"):
            advance(2)
            toks.append(Token(OP, two, span_from(start, sl, sc)))
            continue
        if c in "+-*/=!.":
            advance()
            toks.append(Token(OP, c, span_from(start, sl, sc)))
            continue
        raise LexError(f"unexpected character {c!r}", line, col)

    toks.append(Token(EOF, "", Span(n, n, line, col)))
    return toks
