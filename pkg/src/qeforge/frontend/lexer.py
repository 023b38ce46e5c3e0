"""OpenQASM lexer: wraps the scanner kernel into typed tokens.

Unknown characters and malformed numeric literals never stop the scan;
they become error diagnostics and produce no token.
"""

from __future__ import annotations

from qeforge import scanner
from qeforge.diagnostics import Category, Diagnostic, SourceSpan, error
from qeforge.frontend.tokens import KEYWORDS, REJECTED_KEYWORDS, Token, TokenKind

_KIND_MAP = {
    scanner.K_HWQUBIT: TokenKind.HARDWARE_QUBIT,
    scanner.K_INT: TokenKind.INTEGER,
    scanner.K_FLOAT: TokenKind.FLOAT,
    scanner.K_DURATION: TokenKind.DURATION,
    scanner.K_PUNCT: TokenKind.PUNCTUATION,
    scanner.K_STRING: TokenKind.STRING,
}


def tokenize(source: str) -> tuple[list[Token], list[Diagnostic]]:
    """Scan `source` into a token list ending with an EOF token."""
    data = source.encode("utf-8", errors="surrogateescape")
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line = 1
    col = 1
    for kind, start, end, line, col in scanner.scan(data, scanner.MODE_QASM):
        span = SourceSpan(start, end, line, col)
        text = data[start:end].decode("utf-8", errors="replace")
        if kind == scanner.K_ERROR:
            if text and (text[0].isdigit() or text[0] == "$"):
                msg = f"malformed literal {text!r}"
            else:
                msg = f"unexpected character {text!r}"
            diags.append(error(Category.QASM_PARSE_FAILURE, msg, span, "lex"))
            continue
        if kind == scanner.K_IDENT:
            if text in KEYWORDS or text in REJECTED_KEYWORDS:
                tokens.append(Token(TokenKind.KEYWORD, text, span))
            else:
                tokens.append(Token(TokenKind.IDENTIFIER, text, span))
            continue
        tokens.append(Token(_KIND_MAP[kind], text, span))
    eof_at = len(data)
    if tokens:
        last = tokens[-1].span
        eof_span = SourceSpan(eof_at, eof_at, last.line, last.col + (last.end - last.start))
    else:
        eof_span = SourceSpan(eof_at, eof_at, line, col)
    tokens.append(Token(TokenKind.EOF, "", eof_span))
    return tokens, diags
