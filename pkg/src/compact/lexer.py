"""Tokenizer for compact specification text."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import IllegalCharacter
from .syntax import KEYWORDS, Position

PUNCTUATION = {
    "->": "ARROW",
    "<=": "LE",
    ">=": "GE",
    ":": "COLON",
    "(": "LPAREN",
    ")": "RPAREN",
    "{": "LBRACE",
    "}": "RBRACE",
    "[": "LBRACK",
    "]": "RBRACK",
    ",": "COMMA",
    "@": "AT",
    "+": "PLUS",
    "-": "MINUS",
    "<": "LT",
    ">": "GT",
    ".": "DOT",
}

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\f]+)"
    r"|(?P<nl>\n)"
    r"|(?P<comment>\#[^\n]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<int>[0-9]+)"
    r"|(?P<punct>->|<=|>=|[:(){}\[\],@+\-<>.])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: Optional[str]
    position: Position

    def __repr__(self) -> str:
        if self.value is None:
            return self.kind
        return f"{self.kind}({self.value})"

    @property
    def pair(self) -> tuple[str, Optional[str]]:
        return (self.kind, self.value)


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens; ``#`` comments and whitespace are dropped."""
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        where = Position(line, pos - line_start + 1)
        if m is None:
            raise IllegalCharacter(f"illegal character {source[pos]!r}", where)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            if text in KEYWORDS:
                tokens.append(Token("KW", text, where))
            else:
                tokens.append(Token("IDENT", text, where))
        elif kind == "int":
            tokens.append(Token("INT", text, where))
        elif kind == "punct":
            tokens.append(Token(PUNCTUATION[text], None, where))
        pos = m.end()
    return tokens
