"""AST for the supported OpenQASM 3 subset.

Top-level qubit references are hardware qubits ($n); inside gate bodies
they are formal-parameter names. Both appear as QubitRef.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from qeforge.diagnostics import SourceSpan


@dataclass(frozen=True)
class QubitRef:
    """Either a hardware qubit (physical_id set) or a gate-body formal (name set)."""
    span: SourceSpan
    physical_id: Optional[int] = None
    name: Optional[str] = None

    @property
    def is_hardware(self) -> bool:
        return self.physical_id is not None


@dataclass(frozen=True)
class FloatLit:
    value: float
    span: SourceSpan


@dataclass(frozen=True)
class IntLit:
    value: int
    span: SourceSpan


@dataclass(frozen=True)
class ParamRef:
    name: str
    span: SourceSpan


AngleExpr = Union[FloatLit, IntLit, ParamRef]


@dataclass(frozen=True)
class Duration:
    value: float
    unit: str  # dt | ns | us | ms | s
    span: SourceSpan


@dataclass(frozen=True)
class ScalarType:
    kind: str  # "angle" | "bit"
    width: Optional[int]
    span: SourceSpan


@dataclass(frozen=True)
class MeasureExpr:
    qubit: QubitRef
    span: SourceSpan


@dataclass(frozen=True)
class VersionHeader:
    major: int
    minor: int
    span: SourceSpan


@dataclass(frozen=True)
class QubitDecl:
    physical_id: int
    span: SourceSpan


@dataclass(frozen=True)
class BitDecl:
    name: str
    width: int
    span: SourceSpan


@dataclass(frozen=True)
class GateCall:
    name: str
    angle_args: tuple[AngleExpr, ...]
    qubit_args: tuple[QubitRef, ...]
    span: SourceSpan


@dataclass(frozen=True)
class BuiltinU:
    theta: AngleExpr
    phi: AngleExpr
    lam: AngleExpr
    qubit: QubitRef
    span: SourceSpan


@dataclass(frozen=True)
class BuiltinCX:
    control: QubitRef
    target: QubitRef
    span: SourceSpan


@dataclass(frozen=True)
class Reset:
    qubit: QubitRef
    span: SourceSpan


@dataclass(frozen=True)
class Barrier:
    qubits: tuple[QubitRef, ...]  # empty means all declared qubits
    span: SourceSpan


@dataclass(frozen=True)
class Delay:
    duration: Duration
    qubits: tuple[QubitRef, ...]
    span: SourceSpan


@dataclass(frozen=True)
class Measure:
    qubit: QubitRef
    span: SourceSpan


@dataclass(frozen=True)
class Assign:
    lvalue: str
    rvalue: MeasureExpr
    span: SourceSpan


@dataclass(frozen=True)
class IndexedAssign:
    name: str
    index: int
    rvalue: MeasureExpr
    span: SourceSpan


@dataclass(frozen=True)
class Condition:
    name: str
    index: Optional[int]
    span: SourceSpan


@dataclass(frozen=True)
class If:
    cond: Condition
    then_block: tuple
    else_block: tuple
    span: SourceSpan


@dataclass(frozen=True)
class InputDecl:
    name: str
    type: ScalarType
    span: SourceSpan


@dataclass(frozen=True)
class OutputDecl:
    name: str
    type: ScalarType
    span: SourceSpan


@dataclass(frozen=True)
class GateDecl:
    name: str
    params: tuple[str, ...]
    qubits: tuple[str, ...]
    body: tuple
    span: SourceSpan


Statement = Union[
    QubitDecl, BitDecl, GateCall, BuiltinU, BuiltinCX, Reset, Barrier,
    Delay, Measure, Assign, IndexedAssign, If, InputDecl, OutputDecl,
    GateDecl,
]


@dataclass
class Program:
    header: Optional[VersionHeader]
    statements: list = field(default_factory=list)


def dump(node, indent: int = 0) -> str:
    """Deterministic text rendering of an AST (the CLI's --emit ast)."""
    pad = "  " * indent
    if isinstance(node, Program):
        lines = [pad + "(program"]
        if node.header:
            lines.append(dump(node.header, indent + 1))
        for stmt in node.statements:
            lines.append(dump(stmt, indent + 1))
        lines.append(pad + ")")
        return "\n".join(lines)
    if isinstance(node, GateDecl):
        lines = [pad + f"(gate_decl {node.name} params=({' '.join(node.params)})"
                       f" qubits=({' '.join(node.qubits)})"]
        for stmt in node.body:
            lines.append(dump(stmt, indent + 1))
        lines.append(pad + ")")
        return "\n".join(lines)
    if isinstance(node, If):
        lines = [pad + f"(if {_cond_str(node.cond)}"]
        for stmt in node.then_block:
            lines.append(dump(stmt, indent + 1))
        if node.else_block:
            lines.append(pad + " else")
            for stmt in node.else_block:
                lines.append(dump(stmt, indent + 1))
        lines.append(pad + ")")
        return "\n".join(lines)
    return pad + _leaf_str(node)


def _cond_str(cond: Condition) -> str:
    return cond.name if cond.index is None else f"{cond.name}[{cond.index}]"


def _qubit_str(q: QubitRef) -> str:
    return f"${q.physical_id}" if q.is_hardware else str(q.name)


def _angle_str(a) -> str:
    if isinstance(a, ParamRef):
        return a.name
    return repr(a.value)


def _leaf_str(node) -> str:
    if isinstance(node, VersionHeader):
        return f"(version {node.major}.{node.minor})"
    if isinstance(node, QubitDecl):
        return f"(qubit ${node.physical_id})"
    if isinstance(node, BitDecl):
        return f"(bit {node.name} width={node.width})"
    if isinstance(node, GateCall):
        angles = " ".join(_angle_str(a) for a in node.angle_args)
        qubits = " ".join(_qubit_str(q) for q in node.qubit_args)
        return f"(call {node.name} ({angles}) ({qubits}))"
    if isinstance(node, BuiltinU):
        args = " ".join(_angle_str(a) for a in (node.theta, node.phi, node.lam))
        return f"(U ({args}) {_qubit_str(node.qubit)})"
    if isinstance(node, BuiltinCX):
        return f"(CX {_qubit_str(node.control)} {_qubit_str(node.target)})"
    if isinstance(node, Reset):
        return f"(reset {_qubit_str(node.qubit)})"
    if isinstance(node, Barrier):
        return f"(barrier {' '.join(_qubit_str(q) for q in node.qubits)})"
    if isinstance(node, Delay):
        qs = " ".join(_qubit_str(q) for q in node.qubits)
        return f"(delay {node.duration.value}{node.duration.unit} {qs})"
    if isinstance(node, Measure):
        return f"(measure {_qubit_str(node.qubit)})"
    if isinstance(node, Assign):
        return f"(assign {node.lvalue} (measure {_qubit_str(node.rvalue.qubit)}))"
    if isinstance(node, IndexedAssign):
        return (f"(assign {node.name}[{node.index}] "
                f"(measure {_qubit_str(node.rvalue.qubit)}))")
    if isinstance(node, InputDecl):
        return f"(input {node.type.kind} {node.name})"
    if isinstance(node, OutputDecl):
        return f"(output {node.type.kind} {node.name})"
    return f"({type(node).__name__.lower()})"
