"""OpenQASM 3 subset frontend: lexer, parser, AST."""

from qeforge.frontend import ast
from qeforge.frontend.lexer import tokenize
from qeforge.frontend.parser import parse
from qeforge.frontend.tokens import Token, TokenKind

__all__ = ["ast", "tokenize", "parse", "Token", "TokenKind"]
