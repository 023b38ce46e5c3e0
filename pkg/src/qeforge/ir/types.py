"""IR types and attribute values.

Types compare structurally. Attribute values are plain Python ints,
floats and strings plus a few tagged wrappers; everything here prints
to and parses from the canonical textual form.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union


class TypeKind(Enum):
    QUBIT = "qubit"
    CBIT = "cbit"
    ANGLE = "angle"
    INT = "int"
    F64 = "f64"
    DURATION = "duration"
    STRETCH = "stretch"
    FRAME = "frame"
    PORT = "port"
    MIXED_FRAME = "mixed_frame"
    WAVEFORM = "waveform"
    NONE = "none"


DURATION_UNITS = ("dt", "ns", "us", "ms", "s")


@dataclass(frozen=True)
class IrType:
    kind: TypeKind
    width: Optional[int] = None  # cbit, angle, int
    unit: Optional[str] = None   # duration

    def __str__(self) -> str:
        k = self.kind
        if k is TypeKind.QUBIT:
            return "!quir.qubit<1>"
        if k is TypeKind.CBIT:
            return f"!quir.cbit<{self.width}>"
        if k is TypeKind.ANGLE:
            return f"!quir.angle<{self.width}>"
        if k is TypeKind.INT:
            return f"i{self.width}"
        if k is TypeKind.F64:
            return "f64"
        if k is TypeKind.DURATION:
            return f"!quir.duration<{self.unit}>"
        if k is TypeKind.STRETCH:
            return "!quir.stretch"
        if k is TypeKind.NONE:
            return "none"
        return f"!pulse.{k.value}"

    @property
    def is_i1(self) -> bool:
        return self.kind is TypeKind.INT and self.width == 1


def qubit() -> IrType:
    return IrType(TypeKind.QUBIT, width=1)


def cbit(width: int) -> IrType:
    assert width >= 1
    return IrType(TypeKind.CBIT, width=width)


def angle(width: int = 64) -> IrType:
    assert 1 <= width <= 64
    return IrType(TypeKind.ANGLE, width=width)


def int_(width: int) -> IrType:
    assert width >= 1
    return IrType(TypeKind.INT, width=width)


def i1() -> IrType:
    return int_(1)


def i32() -> IrType:
    return int_(32)


def f64() -> IrType:
    return IrType(TypeKind.F64)


def duration(unit: str) -> IrType:
    assert unit in DURATION_UNITS
    return IrType(TypeKind.DURATION, unit=unit)


def stretch() -> IrType:
    return IrType(TypeKind.STRETCH)


def frame() -> IrType:
    return IrType(TypeKind.FRAME)


def port() -> IrType:
    return IrType(TypeKind.PORT)


def mixed_frame() -> IrType:
    return IrType(TypeKind.MIXED_FRAME)


def waveform() -> IrType:
    return IrType(TypeKind.WAVEFORM)


# -- attribute values -------------------------------------------------------

@dataclass(frozen=True)
class SymbolAttr:
    """Reference to a module-level symbol; prints as @name."""
    name: str


@dataclass(frozen=True)
class AngleAttr:
    """Angle constant in radians; the width lives in the op's result type."""
    value: float


@dataclass(frozen=True)
class DurationAttr:
    value: float
    unit: str


class UnitAttr:
    """Valueless marker attribute; prints as the bare key."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unit"


UNIT = UnitAttr()

# Complex waveform samples: tuple of (re, im) pairs.
SamplesAttr = tuple

AttrValue = Union[int, float, str, IrType, SymbolAttr, AngleAttr,
                  DurationAttr, UnitAttr, tuple]


def format_float(v: float) -> str:
    # repr round-trips doubles exactly and is stable across platforms
    return repr(float(v))


def escape_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def format_attr(value: AttrValue) -> str:
    if isinstance(value, bool):  # bools are ints; forbid silently odd output
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return escape_string(value)
    if isinstance(value, IrType):
        return str(value)
    if isinstance(value, SymbolAttr):
        return f"@{value.name}"
    if isinstance(value, AngleAttr):
        return f"#angle<{format_float(value.value)}>"
    if isinstance(value, DurationAttr):
        return f"#duration<{format_float(value.value)}, {value.unit}>"
    if isinstance(value, UnitAttr):
        raise ValueError("unit attributes print as bare keys")
    if isinstance(value, tuple):
        pairs = ", ".join(
            f"[{format_float(re)}, {format_float(im)}]" for re, im in value)
        return f"[{pairs}]"
    raise TypeError(f"unprintable attribute value {value!r}")
