from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError

KEYWORDS = frozenset(
    """
    machine refines set constant variable invariant init event any where then
    end of map in not true false union inter skip
    sets constants variables invariants events
    """.split()
)

# longest first so that e.g. ":=" wins over ":"
SYMBOLS = (
    "|->", ":=", "::", "<:", "<+", "/=", "/\\", "\\/", "=>", "->", "**",
    "\\", ":", "(", ")", "{", "}", "[", "]", ",", ".", "=", "!",
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "keyword" | "symbol" | "eof"
    value: str
    line: int
    column: int

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        if self.kind == "ident":
            return f"identifier {self.value!r}"
        return repr(self.value)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if c in " \t\r\f":
            i, col = i + 1, col + 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group()
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, line, col))
            i, col = m.end(), col + len(word)
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("symbol", sym, line, col))
                i, col = i + len(sym), col + len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens
