"""Token model for the OpenQASM 3 subset."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from qeforge.diagnostics import SourceSpan


class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    HARDWARE_QUBIT = "hardware-qubit"
    INTEGER = "integer-literal"
    FLOAT = "float-literal"
    DURATION = "duration-literal"
    PUNCTUATION = "punctuation"
    STRING = "string"
    EOF = "eof"


# Words with reserved meaning in the supported subset. Words in REJECTED
# are recognized only so the parser can name the unsupported construct.
KEYWORDS = frozenset({
    "OPENQASM", "qubit", "bit", "gate", "reset", "barrier", "delay",
    "measure", "if", "else", "input", "output", "angle",
})
REJECTED_KEYWORDS = frozenset({
    "for", "while", "def", "defcal", "cal", "include", "const", "array",
    "box", "switch", "pragma", "extern", "let", "return", "defcalgrammar",
})


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan

    def is_punct(self, text: str) -> bool:
        return self.kind is TokenKind.PUNCTUATION and self.text == text

    def is_keyword(self, text: str) -> bool:
        return self.kind is TokenKind.KEYWORD and self.text == text
