"""Recursive-descent parser for the OpenQASM 3 subset.

One token of lookahead. Statements that fail to parse are dropped with a
diagnostic spanning the statement, and parsing continues at the next ';'
or block boundary, so a Program is always returned. The parser must not
raise for any input byte sequence.
"""

from __future__ import annotations

from typing import Optional

from qeforge.diagnostics import Category, Diagnostic, SourceSpan, error, warning
from qeforge.frontend import ast
from qeforge.frontend.lexer import tokenize
from qeforge.frontend.tokens import REJECTED_KEYWORDS, Token, TokenKind

_MAX_BLOCK_DEPTH = 64
_MAX_INT = 2**63 - 1


class _StatementError(Exception):
    """Internal: aborts the current statement after a diagnostic was recorded."""


class _Parser:
    def __init__(self, tokens: list[Token], diags: list[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.diags = diags
        self.depth = 0

    # -- token access -----------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def at(self, kind: TokenKind) -> bool:
        return self.cur.kind is kind

    def expect_punct(self, text: str) -> Token:
        if self.cur.is_punct(text):
            return self.advance()
        raise self.fail(f"expected {text!r}, found {self._describe(self.cur)}")

    def fail(self, message: str, category: Category = Category.QASM_PARSE_FAILURE,
             span: Optional[SourceSpan] = None) -> _StatementError:
        self.diags.append(error(category, message, span or self.cur.span, "parse"))
        return _StatementError()

    @staticmethod
    def _describe(tok: Token) -> str:
        return "end of input" if tok.kind is TokenKind.EOF else repr(tok.text)

    def sync(self) -> None:
        """Skip to just past the next ';', or stop before '}' / EOF."""
        while not self.at(TokenKind.EOF):
            tok = self.cur
            if tok.is_punct(";"):
                self.advance()
                return
            if tok.is_punct("}"):
                return
            self.advance()

    # -- program ----------------------------------------------------------

    def parse_program(self) -> ast.Program:
        header = None
        if self.cur.is_keyword("OPENQASM"):
            header = self.parse_header()
        else:
            self.diags.append(warning(
                Category.QASM_PARSE_FAILURE,
                "missing OPENQASM version header; assuming 3.0",
                self.cur.span, "parse"))
        program = ast.Program(header=header)
        while not self.at(TokenKind.EOF):
            if self.cur.is_punct("}"):
                self.diags.append(error(
                    Category.QASM_PARSE_FAILURE, "unmatched '}'",
                    self.cur.span, "parse"))
                self.advance()
                continue
            stmt = self.parse_statement(in_gate_body=False)
            if stmt is not None:
                program.statements.append(stmt)
        return program

    def parse_header(self) -> Optional[ast.VersionHeader]:
        start = self.advance()  # OPENQASM
        try:
            tok = self.cur
            if self.at(TokenKind.FLOAT):
                major_s, _, minor_s = tok.text.partition(".")
                major, minor = int(major_s), int(minor_s or 0)
            elif self.at(TokenKind.INTEGER):
                major, minor = int(tok.text), 0
            else:
                raise self.fail("expected version number after OPENQASM")
            self.advance()
            self.expect_punct(";")
            if major != 3:
                self.diags.append(error(
                    Category.UNSUPPORTED_INPUT,
                    f"unsupported OpenQASM version {major}.{minor}; only 3.x is accepted",
                    tok.span, "parse"))
                return None
            return ast.VersionHeader(major, minor, self._span_from(start.span))
        except _StatementError:
            self.sync()
            return None

    # -- statements -------------------------------------------------------

    def parse_statement(self, in_gate_body: bool):
        tok = self.cur
        try:
            if tok.kind is TokenKind.KEYWORD:
                return self.parse_keyword_statement(tok, in_gate_body)
            if tok.kind is TokenKind.IDENTIFIER:
                return self.parse_ident_statement(in_gate_body)
            if tok.kind is TokenKind.HARDWARE_QUBIT:
                raise self.fail(
                    f"statement cannot start with hardware qubit {tok.text!r}")
            raise self.fail(f"unexpected {self._describe(tok)}")
        except _StatementError:
            self.sync()
            return None

    def parse_keyword_statement(self, tok: Token, in_gate_body: bool):
        name = tok.text
        if name in REJECTED_KEYWORDS:
            raise self.fail(f"{name!r} is not supported by this compiler",
                            Category.UNSUPPORTED_INPUT)
        if in_gate_body and name not in ("barrier", "delay"):
            raise self.fail(
                f"{name!r} statement is not allowed inside a gate body",
                Category.UNSUPPORTED_INPUT)
        if name == "OPENQASM":
            raise self.fail("OPENQASM header must be the first statement")
        if name == "qubit":
            return self.parse_qubit_decl()
        if name == "bit":
            return self.parse_bit_decl()
        if name == "gate":
            return self.parse_gate_decl()
        if name == "reset":
            start = self.advance()
            qubit = self.parse_qubit_ref(in_gate_body)
            self.expect_punct(";")
            return ast.Reset(qubit, self._span_from(start.span))
        if name == "barrier":
            return self.parse_barrier(in_gate_body)
        if name == "delay":
            return self.parse_delay(in_gate_body)
        if name == "measure":
            start = self.advance()
            qubit = self.parse_qubit_ref(in_gate_body)
            self.expect_punct(";")
            return ast.Measure(qubit, self._span_from(start.span))
        if name == "if":
            return self.parse_if()
        if name == "else":
            raise self.fail("'else' without matching 'if'")
        if name in ("input", "output"):
            return self.parse_io_decl(name)
        if name == "angle":
            raise self.fail("angle variables must be declared with 'input'",
                            Category.UNSUPPORTED_INPUT)
        raise self.fail(f"unexpected keyword {name!r}")

    def parse_qubit_decl(self):
        start = self.advance()  # qubit
        if self.cur.is_punct("["):
            raise self.fail("qubit registers are not supported; declare physical "
                            "qubits one at a time", Category.UNSUPPORTED_INPUT)
        if self.at(TokenKind.IDENTIFIER):
            raise self.fail(
                f"virtual qubit {self.cur.text!r}: physical qubits required",
                Category.UNSUPPORTED_INPUT)
        if not self.at(TokenKind.HARDWARE_QUBIT):
            raise self.fail("expected hardware qubit after 'qubit'")
        qubit = self.advance()
        self.expect_punct(";")
        return ast.QubitDecl(int(qubit.text[1:]), self._span_from(start.span))

    def parse_bit_decl(self):
        start = self.advance()  # bit
        width = 1
        if self.cur.is_punct("["):
            self.advance()
            width = self.parse_int_literal("bit width")
            if width < 1:
                raise self.fail("bit width must be at least 1")
            self.expect_punct("]")
        if not self.at(TokenKind.IDENTIFIER):
            raise self.fail("expected name in bit declaration")
        name = self.advance().text
        decl = ast.BitDecl(name, width, self._span_from(start.span))
        if self.cur.is_punct("="):
            # Combined declaration + measurement: bit b = measure $n;
            self.advance()
            rvalue = self.parse_measure_expr()
            self.expect_punct(";")
            assign = ast.Assign(name, rvalue, self._span_from(start.span))
            return [decl, assign]
        self.expect_punct(";")
        return decl

    def parse_gate_decl(self):
        start = self.advance()  # gate
        if not self.at(TokenKind.IDENTIFIER):
            raise self.fail("expected gate name")
        name = self.advance().text
        params: list[str] = []
        if self.cur.is_punct("("):
            self.advance()
            while not self.cur.is_punct(")"):
                if not self.at(TokenKind.IDENTIFIER):
                    raise self.fail("expected parameter name in gate declaration")
                params.append(self.advance().text)
                if self.cur.is_punct(","):
                    self.advance()
                elif not self.cur.is_punct(")"):
                    raise self.fail("expected ',' or ')' in gate parameters")
            self.advance()
        qubits: list[str] = []
        while self.at(TokenKind.IDENTIFIER):
            qubits.append(self.advance().text)
            if self.cur.is_punct(","):
                self.advance()
        if not qubits:
            raise self.fail("gate declaration needs at least one qubit argument")
        body = self.parse_block(in_gate_body=True)
        return ast.GateDecl(name, tuple(params), tuple(qubits), tuple(body),
                            self._span_from(start.span))

    def parse_barrier(self, in_gate_body: bool):
        start = self.advance()
        qubits: list[ast.QubitRef] = []
        while not self.cur.is_punct(";"):
            qubits.append(self.parse_qubit_ref(in_gate_body))
            if self.cur.is_punct(","):
                self.advance()
            elif not self.cur.is_punct(";"):
                raise self.fail("expected ',' or ';' in barrier")
        self.advance()
        return ast.Barrier(tuple(qubits), self._span_from(start.span))

    def parse_delay(self, in_gate_body: bool):
        start = self.advance()
        self.expect_punct("[")
        if not self.at(TokenKind.DURATION):
            raise self.fail("expected duration literal (e.g. 100ns) in delay")
        dur_tok = self.advance()
        duration = self._parse_duration(dur_tok)
        self.expect_punct("]")
        qubits: list[ast.QubitRef] = []
        while not self.cur.is_punct(";"):
            qubits.append(self.parse_qubit_ref(in_gate_body))
            if self.cur.is_punct(","):
                self.advance()
            elif not self.cur.is_punct(";"):
                raise self.fail("expected ',' or ';' in delay")
        self.advance()
        return ast.Delay(duration, tuple(qubits), self._span_from(start.span))

    def parse_if(self):
        if self.depth >= _MAX_BLOCK_DEPTH:
            raise self.fail("blocks nested too deeply")
        start = self.advance()  # if
        self.expect_punct("(")
        if not self.at(TokenKind.IDENTIFIER):
            raise self.fail("if condition must be a declared bit variable",
                            Category.UNSUPPORTED_INPUT)
        cond_tok = self.advance()
        index = None
        if self.cur.is_punct("["):
            self.advance()
            index = self.parse_int_literal("bit index")
            self.expect_punct("]")
        cond = ast.Condition(cond_tok.text, index, cond_tok.span)
        self.expect_punct(")")
        self.depth += 1
        try:
            then_block = self.parse_block(in_gate_body=False)
            else_block: list = []
            if self.cur.is_keyword("else"):
                self.advance()
                else_block = self.parse_block(in_gate_body=False)
        finally:
            self.depth -= 1
        return ast.If(cond, tuple(then_block), tuple(else_block),
                      self._span_from(start.span))

    def parse_io_decl(self, direction: str):
        start = self.advance()  # input / output
        ty = self.parse_scalar_type()
        if not self.at(TokenKind.IDENTIFIER):
            raise self.fail(f"expected name in {direction} declaration")
        name = self.advance().text
        self.expect_punct(";")
        node_cls = ast.InputDecl if direction == "input" else ast.OutputDecl
        if direction == "input" and ty.kind != "angle":
            raise self.fail("only angle-typed inputs are supported",
                            Category.UNSUPPORTED_INPUT, ty.span)
        if direction == "output" and ty.kind != "bit":
            raise self.fail("only bit-typed outputs are supported",
                            Category.UNSUPPORTED_INPUT, ty.span)
        return node_cls(name, ty, self._span_from(start.span))

    def parse_scalar_type(self) -> ast.ScalarType:
        tok = self.cur
        if tok.is_keyword("angle") or tok.is_keyword("bit"):
            self.advance()
            width = None
            if self.cur.is_punct("["):
                self.advance()
                width = self.parse_int_literal("type width")
                if width < 1 or width > 64:
                    raise self.fail("type width must be in 1..64")
                self.expect_punct("]")
            return ast.ScalarType(tok.text, width, tok.span)
        raise self.fail("expected 'angle' or 'bit' type",
                        Category.UNSUPPORTED_INPUT)

    def parse_ident_statement(self, in_gate_body: bool):
        # Either an assignment (name[, [k]] = measure $n;) or a gate call.
        name_tok = self.cur
        nxt = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else name_tok
        if not in_gate_body and (nxt.is_punct("=") or nxt.is_punct("[")):
            return self.parse_assign()
        return self.parse_gate_call(in_gate_body)

    def parse_assign(self):
        name_tok = self.advance()
        index = None
        if self.cur.is_punct("["):
            self.advance()
            index = self.parse_int_literal("bit index")
            self.expect_punct("]")
        self.expect_punct("=")
        rvalue = self.parse_measure_expr()
        self.expect_punct(";")
        span = self._span_from(name_tok.span)
        if index is None:
            return ast.Assign(name_tok.text, rvalue, span)
        return ast.IndexedAssign(name_tok.text, index, rvalue, span)

    def parse_measure_expr(self) -> ast.MeasureExpr:
        if not self.cur.is_keyword("measure"):
            raise self.fail("only 'measure' results can be assigned",
                            Category.UNSUPPORTED_INPUT)
        start = self.advance()
        qubit = self.parse_qubit_ref(in_gate_body=False)
        return ast.MeasureExpr(qubit, self._span_from(start.span))

    def parse_gate_call(self, in_gate_body: bool):
        name_tok = self.advance()
        name = name_tok.text
        angle_args: list[ast.AngleExpr] = []
        if self.cur.is_punct("("):
            self.advance()
            while not self.cur.is_punct(")"):
                angle_args.append(self.parse_angle_expr())
                if self.cur.is_punct(","):
                    self.advance()
                elif not self.cur.is_punct(")"):
                    raise self.fail("expected ',' or ')' in gate arguments")
            self.advance()
        qubits: list[ast.QubitRef] = []
        while not self.cur.is_punct(";"):
            qubits.append(self.parse_qubit_ref(in_gate_body))
            if self.cur.is_punct(","):
                self.advance()
            elif not self.cur.is_punct(";"):
                raise self.fail("expected ',' or ';' after qubit arguments")
        self.advance()
        span = self._span_from(name_tok.span)
        if not qubits:
            raise self.fail(f"gate call {name!r} needs at least one qubit",
                            span=span)
        if name == "U":
            if len(angle_args) != 3 or len(qubits) != 1:
                raise self.fail("U takes 3 angles and 1 qubit", span=span)
            return ast.BuiltinU(angle_args[0], angle_args[1], angle_args[2],
                                qubits[0], span)
        if name == "CX":
            if angle_args or len(qubits) != 2:
                raise self.fail("CX takes no angles and 2 qubits", span=span)
            return ast.BuiltinCX(qubits[0], qubits[1], span)
        return ast.GateCall(name, tuple(angle_args), tuple(qubits), span)

    def parse_angle_expr(self) -> ast.AngleExpr:
        neg = False
        start = self.cur.span
        if self.cur.is_punct("-"):
            neg = True
            self.advance()
        tok = self.cur
        if tok.kind is TokenKind.FLOAT:
            self.advance()
            value = float(tok.text)
            return ast.FloatLit(-value if neg else value, start)
        if tok.kind is TokenKind.INTEGER:
            self.advance()
            value = self.check_int(tok)
            return ast.IntLit(-value if neg else value, start)
        if tok.kind is TokenKind.IDENTIFIER and not neg:
            self.advance()
            return ast.ParamRef(tok.text, tok.span)
        raise self.fail("expected angle literal or parameter name")

    def parse_qubit_ref(self, in_gate_body: bool) -> ast.QubitRef:
        tok = self.cur
        if tok.kind is TokenKind.HARDWARE_QUBIT:
            if in_gate_body:
                raise self.fail("hardware qubits cannot appear in gate bodies",
                                Category.UNSUPPORTED_INPUT)
            self.advance()
            return ast.QubitRef(tok.span, physical_id=int(tok.text[1:]))
        if tok.kind is TokenKind.IDENTIFIER:
            if not in_gate_body:
                raise self.fail(
                    f"virtual qubit {tok.text!r}: physical qubits required",
                    Category.UNSUPPORTED_INPUT)
            self.advance()
            return ast.QubitRef(tok.span, name=tok.text)
        raise self.fail(f"expected qubit, found {self._describe(tok)}")

    def parse_block(self, in_gate_body: bool) -> list:
        open_tok = self.expect_punct("{")
        stmts: list = []
        while True:
            if self.cur.is_punct("}"):
                self.advance()
                return stmts
            if self.at(TokenKind.EOF):
                # Unbalanced brace: one diagnostic, abort the whole block.
                raise self.fail("unbalanced '{': block is never closed",
                                span=open_tok.span)
            stmt = self.parse_statement(in_gate_body)
            if stmt is not None:
                if isinstance(stmt, list):
                    stmts.extend(stmt)
                else:
                    stmts.append(stmt)

    # -- small helpers ------------------------------------------------------

    def parse_int_literal(self, what: str) -> int:
        if not self.at(TokenKind.INTEGER):
            raise self.fail(f"expected integer {what}")
        return self.check_int(self.advance())

    def check_int(self, tok: Token) -> int:
        value = int(tok.text)
        if value > _MAX_INT:
            raise self.fail(f"integer literal {tok.text} is too large",
                            span=tok.span)
        return value

    def _parse_duration(self, tok: Token) -> ast.Duration:
        text = tok.text
        split = len(text)
        while split > 0 and text[split - 1].isalpha():
            split -= 1
        return ast.Duration(float(text[:split]), text[split:], tok.span)

    def _span_from(self, start: SourceSpan) -> SourceSpan:
        prev = self.tokens[self.pos - 1] if self.pos > 0 else self.tokens[0]
        end = max(start.end, prev.span.end)
        return SourceSpan(start.start, end, start.line, start.col)


def parse(source: str) -> tuple[ast.Program, list[Diagnostic]]:
    """Parse OpenQASM source into a Program plus diagnostics.

    The Program is returned even when diagnostics contain errors; the
    caller decides whether to proceed.
    """
    tokens, diags = tokenize(source)
    parser = _Parser(tokens, diags)
    program = parser.parse_program()
    # Flatten combined bit-decl+measure statements produced as lists.
    flat: list = []
    for stmt in program.statements:
        if isinstance(stmt, list):
            flat.extend(stmt)
        else:
            flat.append(stmt)
    program.statements = flat
    return program, diags
