"""Parser for the canonical IR text form (.qeir files)."""

from __future__ import annotations

from typing import Optional

from qeforge import dialects, scanner
from qeforge.diagnostics import Category, Diagnostic, SourceSpan, error
from qeforge.ir.core import Block, IrModule, Operation, Region, Value
from qeforge.ir.types import (
    AngleAttr, DurationAttr, IrType, SymbolAttr, TypeKind, UNIT,
    DURATION_UNITS,
)
from qeforge.ir import types as T

_MAX_REGION_DEPTH = 64


class _ParseAbort(Exception):
    pass


class _Tok:
    __slots__ = ("kind", "text", "span")

    def __init__(self, kind, text, span):
        self.kind = kind
        self.text = text
        self.span = span


_EOF = object()


class _IrParser:
    def __init__(self, text: str):
        data = text.encode("utf-8", errors="surrogateescape")
        self.toks: list[_Tok] = []
        self.diags: list[Diagnostic] = []
        for kind, start, end, line, col in scanner.scan(data, scanner.MODE_IR):
            span = SourceSpan(start, end, line, col)
            tok_text = data[start:end].decode("utf-8", errors="replace")
            if kind == scanner.K_ERROR:
                self.diags.append(error(
                    Category.CONFIG_ERROR,
                    f"unexpected character {tok_text!r} in IR text",
                    span, "ir-parse"))
                continue
            self.toks.append(_Tok(kind, tok_text, span))
        end_span = (self.toks[-1].span if self.toks
                    else SourceSpan(0, 0, 1, 1))
        self.toks.append(_Tok(_EOF, "", end_span))
        self.pos = 0
        self.module = IrModule()
        # Scope stack of (values-by-number, isolated?) frames.
        self.scopes: list[tuple[dict[int, Value], bool]] = []
        self.depth = 0

    # -- token helpers ------------------------------------------------------

    @property
    def cur(self) -> _Tok:
        return self.toks[self.pos]

    def advance(self) -> _Tok:
        tok = self.toks[self.pos]
        if tok.kind is not _EOF:
            self.pos += 1
        return tok

    def at_punct(self, text: str) -> bool:
        tok = self.cur
        return tok.kind == scanner.K_PUNCT and tok.text == text

    def eat_punct(self, text: str) -> bool:
        if self.at_punct(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if self.at_punct(text):
            return self.advance()
        raise self.fail(f"expected {text!r}, found {self.describe()}")

    def describe(self) -> str:
        tok = self.cur
        return "end of input" if tok.kind is _EOF else repr(tok.text)

    def fail(self, message: str,
             category: Category = Category.CONFIG_ERROR,
             span: Optional[SourceSpan] = None) -> _ParseAbort:
        self.diags.append(error(category, message, span or self.cur.span,
                                "ir-parse"))
        return _ParseAbort()

    # -- scopes --------------------------------------------------------------

    def push_scope(self, isolated: bool) -> None:
        self.scopes.append(({}, isolated))

    def pop_scope(self) -> None:
        self.scopes.pop()

    def define_value(self, number: int, ty: IrType,
                     span: Optional[SourceSpan] = None) -> Value:
        frame = self.scopes[-1][0]
        for values, isolated in reversed(self.scopes):
            if number in values:
                raise self.fail(f"%{number} is defined twice",
                                Category.UNKNOWN_SYMBOL, span)
            if isolated:
                break
        value = self.module.new_value(ty)
        frame[number] = value
        return value

    def lookup_value(self, number: int,
                     span: Optional[SourceSpan] = None) -> Value:
        for values, isolated in reversed(self.scopes):
            if number in values:
                return values[number]
            if isolated:
                break
        raise self.fail(f"use of undefined value %{number}",
                        Category.UNKNOWN_SYMBOL, span)

    # -- grammar -------------------------------------------------------------

    def parse_module(self) -> IrModule:
        tok = self.cur
        if tok.kind != scanner.K_IDENT or tok.text != "module":
            raise self.fail("expected 'module'")
        self.advance()
        self.expect("{")
        self.push_scope(isolated=True)
        self.module.block.ops = self.parse_ops_until_close()
        self.pop_scope()
        if self.cur.kind is not _EOF:
            raise self.fail(f"trailing input after module: {self.describe()}")
        return self.module

    def parse_ops_until_close(self) -> list[Operation]:
        ops = []
        while True:
            if self.eat_punct("}"):
                return ops
            if self.cur.kind is _EOF:
                raise self.fail("unterminated block: missing '}'")
            ops.append(self.parse_op())

    def parse_op(self) -> Operation:
        result_numbers: list[int] = []
        if self.cur.kind == scanner.K_VALUE:
            while True:
                result_numbers.append(int(self.advance().text[1:]))
                if not self.eat_punct(","):
                    break
            self.expect("=")
        name_tok = self.cur
        if name_tok.kind != scanner.K_IDENT:
            raise self.fail(f"expected operation name, found {self.describe()}")
        self.advance()
        name = name_tok.text
        sig = dialects.lookup(name)
        if sig is None:
            self.diags.append(error(
                Category.UNKNOWN_SYMBOL, f"unknown operation {name!r}",
                name_tok.span, "ir-parse"))
            raise _ParseAbort()

        self.expect("(")
        operand_numbers: list[tuple[int, SourceSpan]] = []
        while not self.at_punct(")"):
            tok = self.cur
            if tok.kind != scanner.K_VALUE:
                raise self.fail(f"expected value reference, found {self.describe()}")
            self.advance()
            operand_numbers.append((int(tok.text[1:]), tok.span))
            if not self.eat_punct(","):
                break
        self.expect(")")

        # A '{' before the type signature is always an attribute dict;
        # region braces only appear after the '-> (...)' part.
        attrs = {}
        if self.at_punct("{"):
            attrs = self.parse_attr_dict()

        self.expect(":")
        self.expect("(")
        operand_types = self.parse_type_list(")")
        self.expect("->")
        self.expect("(")
        result_types = self.parse_type_list(")")

        if len(operand_types) != len(operand_numbers):
            raise self.fail(
                f"{name}: {len(operand_numbers)} operands but "
                f"{len(operand_types)} operand types", Category.TYPE_MISMATCH)
        if len(result_types) != len(result_numbers):
            raise self.fail(
                f"{name}: {len(result_numbers)} results but "
                f"{len(result_types)} result types", Category.TYPE_MISMATCH)

        operands = []
        for (number, span), ty in zip(operand_numbers, operand_types):
            value = self.lookup_value(number, span)
            if value.type != ty:
                raise self.fail(
                    f"{name}: %{number} has type {value.type}, not {ty}",
                    Category.TYPE_MISMATCH, span)
            operands.append(value)
        results = [self.define_value(number, ty)
                   for number, ty in zip(result_numbers, result_types)]

        regions: list[Region] = []
        while self.at_punct("{"):
            if self.depth >= _MAX_REGION_DEPTH:
                raise self.fail("regions nested too deeply")
            self.advance()
            self.depth += 1
            self.push_scope(isolated=sig.has(dialects.Trait.ISOLATED))
            try:
                args: list[Value] = []
                if self.at_punct("^"):
                    self.advance()
                    self.expect("(")
                    while not self.at_punct(")"):
                        vtok = self.cur
                        if vtok.kind != scanner.K_VALUE:
                            raise self.fail("expected block argument %N")
                        self.advance()
                        self.expect(":")
                        ty = self.parse_type()
                        args.append(self.define_value(int(vtok.text[1:]), ty))
                        if not self.eat_punct(","):
                            break
                    self.expect(")")
                    self.expect(":")
                ops = self.parse_ops_until_close()
                regions.append(Region([Block(args, ops)]))
            finally:
                self.pop_scope()
                self.depth -= 1

        return Operation(name, operands, results, attrs, regions)

    def parse_attr_dict(self) -> dict:
        self.expect("{")
        attrs: dict = {}
        while not self.at_punct("}"):
            key_tok = self.cur
            if key_tok.kind != scanner.K_IDENT:
                raise self.fail(f"expected attribute name, found {self.describe()}")
            self.advance()
            if self.eat_punct("="):
                attrs[key_tok.text] = self.parse_attr_value()
            else:
                attrs[key_tok.text] = UNIT
            if not self.eat_punct(","):
                break
        self.expect("}")
        return attrs

    def parse_attr_value(self):
        tok = self.cur
        if tok.kind == scanner.K_INT:
            self.advance()
            return int(tok.text)
        if tok.kind == scanner.K_FLOAT:
            self.advance()
            return float(tok.text)
        if self.at_punct("-"):
            self.advance()
            tok = self.cur
            if tok.kind == scanner.K_INT:
                self.advance()
                return -int(tok.text)
            if tok.kind == scanner.K_FLOAT:
                self.advance()
                return -float(tok.text)
            raise self.fail("expected number after '-'")
        if tok.kind == scanner.K_STRING:
            self.advance()
            return _unescape(tok.text)
        if tok.kind == scanner.K_SYMBOL:
            self.advance()
            return SymbolAttr(tok.text[1:])
        if self.at_punct("!") or tok.kind == scanner.K_IDENT:
            return self.parse_type()
        if self.at_punct("#"):
            return self.parse_tagged_constant()
        if self.at_punct("["):
            return self.parse_samples()
        raise self.fail(f"expected attribute value, found {self.describe()}")

    def parse_tagged_constant(self):
        self.expect("#")
        tag = self.cur
        if tag.kind != scanner.K_IDENT or tag.text not in ("angle", "duration"):
            raise self.fail("expected 'angle' or 'duration' after '#'")
        self.advance()
        self.expect("<")
        value = self.parse_signed_number()
        if tag.text == "angle":
            self.expect(">")
            return AngleAttr(float(value))
        self.expect(",")
        unit_tok = self.cur
        if unit_tok.kind != scanner.K_IDENT or unit_tok.text not in DURATION_UNITS:
            raise self.fail("expected duration unit")
        self.advance()
        self.expect(">")
        return DurationAttr(float(value), unit_tok.text)

    def parse_signed_number(self) -> float:
        negative = self.eat_punct("-")
        tok = self.cur
        if tok.kind not in (scanner.K_INT, scanner.K_FLOAT):
            raise self.fail(f"expected number, found {self.describe()}")
        self.advance()
        value = float(tok.text)
        return -value if negative else value

    def parse_samples(self) -> tuple:
        self.expect("[")
        pairs = []
        while not self.at_punct("]"):
            self.expect("[")
            re = self.parse_signed_number()
            self.expect(",")
            im = self.parse_signed_number()
            self.expect("]")
            pairs.append((re, im))
            if not self.eat_punct(","):
                break
        self.expect("]")
        return tuple(pairs)

    def parse_type_list(self, close: str) -> list[IrType]:
        out: list[IrType] = []
        while not self.at_punct(close):
            out.append(self.parse_type())
            if not self.eat_punct(","):
                break
        self.expect(close)
        return out

    def parse_type(self) -> IrType:
        tok = self.cur
        if tok.kind == scanner.K_IDENT:
            text = tok.text
            if text == "f64":
                self.advance()
                return T.f64()
            if text == "none":
                self.advance()
                return IrType(TypeKind.NONE)
            if len(text) > 1 and text[0] == "i" and text[1:].isdigit():
                self.advance()
                width = int(text[1:])
                if not 1 <= width <= 64:
                    raise self.fail(f"unsupported integer width {width}",
                                    Category.TYPE_MISMATCH)
                return T.int_(width)
            raise self.fail(f"unknown type {text!r}", Category.TYPE_MISMATCH)
        if self.at_punct("!"):
            self.advance()
            name_tok = self.cur
            if name_tok.kind != scanner.K_IDENT:
                raise self.fail("expected type name after '!'")
            self.advance()
            return self.parse_named_type(name_tok.text)
        raise self.fail(f"expected type, found {self.describe()}")

    def parse_named_type(self, name: str) -> IrType:
        simple = {
            "quir.stretch": T.stretch(),
            "pulse.frame": T.frame(),
            "pulse.port": T.port(),
            "pulse.mixed_frame": T.mixed_frame(),
            "pulse.waveform": T.waveform(),
        }
        if name in simple:
            return simple[name]
        if name in ("quir.qubit", "quir.cbit", "quir.angle"):
            self.expect("<")
            tok = self.cur
            if tok.kind != scanner.K_INT:
                raise self.fail("expected width", Category.TYPE_MISMATCH)
            self.advance()
            width = int(tok.text)
            self.expect(">")
            if name == "quir.qubit":
                if width != 1:
                    raise self.fail("qubit width must be 1",
                                    Category.TYPE_MISMATCH)
                return T.qubit()
            if name == "quir.cbit":
                if width < 1:
                    raise self.fail("cbit width must be positive",
                                    Category.TYPE_MISMATCH)
                return T.cbit(width)
            if not 1 <= width <= 64:
                raise self.fail("angle width must be in 1..64",
                                Category.TYPE_MISMATCH)
            return T.angle(width)
        if name == "quir.duration":
            self.expect("<")
            unit_tok = self.cur
            if unit_tok.kind != scanner.K_IDENT or \
                    unit_tok.text not in DURATION_UNITS:
                raise self.fail("expected duration unit", Category.TYPE_MISMATCH)
            self.advance()
            self.expect(">")
            return T.duration(unit_tok.text)
        raise self.fail(f"unknown type !{name}", Category.TYPE_MISMATCH)


def _unescape(raw: str) -> str:
    # raw includes the surrounding quotes
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            if nxt == "n":
                out.append("\n")
            elif nxt == "t":
                out.append("\t")
            elif nxt == "u" and i + 5 < len(body):
                try:
                    out.append(chr(int(body[i + 2:i + 6], 16)))
                    i += 6
                    continue
                except ValueError:
                    out.append(nxt)
            else:
                out.append(nxt)
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def parse_module(text: str) -> tuple[IrModule, list[Diagnostic]]:
    """Parse canonical IR text; on error, diagnostics carry the location
    and parsing aborts (the returned module is unusable)."""
    parser = _IrParser(text)
    if parser.diags:
        return IrModule(), parser.diags
    try:
        module = parser.parse_module()
    except _ParseAbort:
        return IrModule(), parser.diags
    except RecursionError:  # belt and braces; depth guard should prevent this
        parser.diags.append(error(Category.CONFIG_ERROR,
                                  "IR text too deeply nested", None, "ir-parse"))
        return IrModule(), parser.diags
    return module, parser.diags
