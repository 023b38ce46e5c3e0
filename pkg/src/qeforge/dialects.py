"""Operation registry for the oq3, quir, qcs, pulse, scf, func and builtin
dialects: signatures, required attributes, region shapes and traits.

The registry is immutable after import and globally shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from qeforge.ir.types import (
    AngleAttr, DurationAttr, IrType, SymbolAttr, TypeKind, UnitAttr,
)


class Trait(Enum):
    QUANTUM = "QuantumOp"
    CLASSICAL = "ClassicalOp"
    CONTROL_FLOW = "ControlFlowOp"
    SYMBOL_DEF = "SymbolDef"
    SYMBOL_USE = "SymbolUse"
    ISOLATED = "IsolatedRegion"
    TERMINATOR = "Terminator"


PRIMARY_TRAITS = (Trait.QUANTUM, Trait.CLASSICAL, Trait.CONTROL_FLOW)


class AttrKind(Enum):
    INT = "int"
    FLOAT = "float"
    STR = "string"
    SYMBOL = "symbol"
    TYPE = "type"
    ANGLE = "angle"
    DURATION = "duration"
    UNIT = "unit"
    SAMPLES = "samples"
    CONST = "angle-or-duration"
    SCALAR = "scalar"

    def matches(self, value) -> bool:
        if self is AttrKind.INT:
            return isinstance(value, int) and not isinstance(value, bool)
        if self is AttrKind.FLOAT:
            return isinstance(value, float)
        if self is AttrKind.STR:
            return isinstance(value, str)
        if self is AttrKind.SYMBOL:
            return isinstance(value, SymbolAttr)
        if self is AttrKind.TYPE:
            return isinstance(value, IrType)
        if self is AttrKind.ANGLE:
            return isinstance(value, AngleAttr)
        if self is AttrKind.DURATION:
            return isinstance(value, DurationAttr)
        if self is AttrKind.UNIT:
            return isinstance(value, UnitAttr)
        if self is AttrKind.SAMPLES:
            return isinstance(value, tuple)
        if self is AttrKind.CONST:
            return isinstance(value, (AngleAttr, DurationAttr))
        if self is AttrKind.SCALAR:
            return isinstance(value, (int, float, AngleAttr))
        return False


def check_constraint(constraint: str, ty: IrType) -> bool:
    if constraint == "any":
        return True
    if constraint == "i1":
        return ty.kind is TypeKind.INT and ty.width == 1
    if constraint == "int":
        return ty.kind is TypeKind.INT
    return ty.kind.value == constraint


@dataclass(frozen=True)
class OpSignature:
    name: str
    operands: tuple = ()
    variadic: Optional[str] = None          # constraint for trailing operands
    results: tuple = ()
    variadic_results: bool = False          # call-like ops: results cross-checked
    attrs: tuple = ()                       # required (name, AttrKind)
    opt_attrs: tuple = ()                   # optional (name, AttrKind)
    regions: int = 0
    region_args: Optional[tuple] = None     # None = no block args; "any" = free
    traits: frozenset = field(default_factory=frozenset)

    def has(self, trait: Trait) -> bool:
        return trait in self.traits

    @property
    def primary_trait(self) -> Trait:
        for t in PRIMARY_TRAITS:
            if t in self.traits:
                return t
        raise AssertionError(f"{self.name} has no primary trait")


def _sig(name, operands=(), variadic=None, results=(), variadic_results=False,
         attrs=(), opt_attrs=(), regions=0, region_args=None, traits=()):
    return OpSignature(name, tuple(operands), variadic, tuple(results),
                       variadic_results, tuple(attrs), tuple(opt_attrs),
                       regions, region_args, frozenset(traits))


_Q = Trait.QUANTUM
_C = Trait.CLASSICAL
_F = Trait.CONTROL_FLOW
_DEF = Trait.SYMBOL_DEF
_USE = Trait.SYMBOL_USE
_ISO = Trait.ISOLATED
_TERM = Trait.TERMINATOR

_SYM = (("symbol", AttrKind.SYMBOL),)
_CALLEE = (("callee", AttrKind.SYMBOL),)
_FUNCLIKE = (("sym_name", AttrKind.SYMBOL),)

_OPS = [
    # oq3: OpenQASM-level variable handling and casts
    _sig("oq3.declare_variable", attrs=_SYM + (("type", AttrKind.TYPE),),
         opt_attrs=(("output", AttrKind.UNIT),), traits=(_C, _DEF)),
    _sig("oq3.variable_assign", operands=("any",), attrs=_SYM,
         traits=(_C, _USE)),
    _sig("oq3.variable_load", results=("any",), attrs=_SYM, traits=(_C, _USE)),
    _sig("oq3.cast", operands=("any",), results=("any",), traits=(_C,)),
    _sig("oq3.cbit_assign_bit", operands=("i1",),
         attrs=_SYM + (("index", AttrKind.INT),), traits=(_C, _USE)),
    _sig("oq3.cbit_extract_bit", operands=("cbit",), results=("i1",),
         attrs=(("index", AttrKind.INT),), traits=(_C,)),

    # quir: gate-level quantum circuits
    _sig("quir.declare_qubit", results=("qubit",),
         attrs=(("id", AttrKind.INT),), traits=(_C,)),
    _sig("quir.builtin_U", operands=("qubit", "angle", "angle", "angle"),
         traits=(_Q,)),
    _sig("quir.builtin_CX", operands=("qubit", "qubit"), traits=(_Q,)),
    _sig("quir.reset", operands=("qubit",), traits=(_Q,)),
    _sig("quir.measure", operands=("qubit",), results=("i1",), traits=(_Q,)),
    _sig("quir.barrier", variadic="qubit", traits=(_Q,)),
    _sig("quir.delay", operands=("duration",), variadic="qubit", traits=(_Q,)),
    _sig("quir.call_gate", variadic="any", attrs=_CALLEE, traits=(_Q, _USE)),
    _sig("quir.constant", results=("any",),
         attrs=(("value", AttrKind.CONST),), traits=(_C,)),
    _sig("quir.circuit", attrs=_FUNCLIKE, regions=1, region_args="any",
         traits=(_C, _DEF, _ISO)),
    _sig("quir.call_circuit", variadic="any", variadic_results=True,
         attrs=_CALLEE, traits=(_C, _USE)),
    _sig("quir.return", variadic="any", traits=(_F, _TERM)),

    # qcs: control-system level operations
    _sig("qcs.init", traits=(_F,)),
    _sig("qcs.finalize", traits=(_F,)),
    _sig("qcs.shot_init", attrs=(("num_shots", AttrKind.INT),), traits=(_F,)),
    _sig("qcs.synchronize", variadic="any", traits=(_F,)),
    _sig("qcs.broadcast", operands=("any",),
         opt_attrs=(("bit", AttrKind.INT),), traits=(_C,)),
    _sig("qcs.send", operands=("any",),
         attrs=(("to", AttrKind.STR),), opt_attrs=(("bit", AttrKind.INT),),
         traits=(_C,)),
    _sig("qcs.recv", results=("any",),
         attrs=(("from", AttrKind.STR),), opt_attrs=(("bit", AttrKind.INT),),
         traits=(_C,)),
    _sig("qcs.parallel_control_flow", regions=1, traits=(_F,)),
    _sig("qcs.declare_parameter",
         attrs=_SYM + (("type", AttrKind.TYPE), ("default", AttrKind.SCALAR)),
         traits=(_C, _DEF)),
    _sig("qcs.parameter_load", results=("any",), attrs=_SYM, traits=(_C, _USE)),

    # pulse: frames, ports and waveform playback
    _sig("pulse.frame", results=("frame",),
         attrs=(("frequency", AttrKind.FLOAT), ("phase", AttrKind.FLOAT)),
         opt_attrs=(("uid", AttrKind.STR),), traits=(_C,)),
    _sig("pulse.port", results=("port",), attrs=(("uid", AttrKind.STR),),
         traits=(_C,)),
    _sig("pulse.mix_frame", operands=("port", "frame"),
         results=("mixed_frame",), opt_attrs=(("uid", AttrKind.STR),),
         traits=(_C,)),
    _sig("pulse.create_waveform", results=("waveform",),
         attrs=(("samples", AttrKind.SAMPLES),), traits=(_C,)),
    _sig("pulse.shift_phase", operands=("mixed_frame", "f64"), traits=(_Q,)),
    _sig("pulse.set_phase", operands=("mixed_frame", "f64"), traits=(_Q,)),
    _sig("pulse.shift_frequency", operands=("mixed_frame", "f64"),
         traits=(_Q,)),
    _sig("pulse.set_frequency", operands=("mixed_frame", "f64"), traits=(_Q,)),
    _sig("pulse.play", operands=("mixed_frame", "waveform"), traits=(_Q,)),
    _sig("pulse.capture", operands=("mixed_frame",), results=("i1",),
         opt_attrs=(("duration", AttrKind.INT), ("bit", AttrKind.INT)),
         traits=(_Q,)),
    _sig("pulse.barrier", variadic="mixed_frame", traits=(_Q,)),
    _sig("pulse.delay", operands=("duration", "mixed_frame"), traits=(_Q,)),
    _sig("pulse.sequence", attrs=_FUNCLIKE,
         opt_attrs=(("duration", AttrKind.INT),
                    ("frames", AttrKind.STR)), regions=1,
         region_args="any", traits=(_C, _DEF, _ISO)),
    _sig("pulse.call_sequence", variadic="any", variadic_results=True,
         attrs=_CALLEE, traits=(_C, _USE)),
    _sig("pulse.return", variadic="any", traits=(_F, _TERM)),

    # func + scf: functions and structured control flow
    _sig("func.func", attrs=_FUNCLIKE, regions=1, region_args="any",
         traits=(_C, _DEF, _ISO)),
    _sig("func.call", variadic="any", variadic_results=True, attrs=_CALLEE,
         traits=(_C, _USE)),
    _sig("func.return", variadic="any", traits=(_F, _TERM)),
    _sig("scf.if", operands=("i1",), regions=2, traits=(_F,)),
    _sig("scf.for", operands=("int", "int", "int"), regions=1,
         region_args=("int",), opt_attrs=(("qcs.shot_loop", AttrKind.UNIT),),
         traits=(_F,)),

    # builtin: module container, global memory and the integer ops used by
    # variable lowering
    _sig("builtin.module", regions=1, traits=(_F,)),
    _sig("builtin.global_memory",
         attrs=_SYM + (("type", AttrKind.TYPE), ("initial", AttrKind.INT)),
         traits=(_C, _DEF)),
    _sig("builtin.memory_store", operands=("any",), attrs=_SYM,
         traits=(_C, _USE)),
    _sig("builtin.memory_load", results=("any",), attrs=_SYM,
         traits=(_C, _USE)),
    _sig("builtin.int_const", results=("int",),
         attrs=(("value", AttrKind.INT),), traits=(_C,)),
    _sig("builtin.float_const", results=("f64",),
         attrs=(("value", AttrKind.FLOAT),), traits=(_C,)),
    _sig("builtin.and", operands=("int", "int"), results=("int",),
         traits=(_C,)),
    _sig("builtin.or", operands=("int", "int"), results=("int",),
         traits=(_C,)),
    _sig("builtin.xor", operands=("int", "int"), results=("int",),
         traits=(_C,)),
    _sig("builtin.shl", operands=("int",), results=("int",),
         attrs=(("amount", AttrKind.INT),), traits=(_C,)),
    _sig("builtin.lshr", operands=("int",), results=("int",),
         attrs=(("amount", AttrKind.INT),), traits=(_C,)),
    _sig("builtin.zext", operands=("int",), results=("int",), traits=(_C,)),
    _sig("builtin.trunc", operands=("int",), results=("int",), traits=(_C,)),
]

_REGISTRY: dict[str, OpSignature] = {sig.name: sig for sig in _OPS}
assert len(_REGISTRY) == len(_OPS), "duplicate op registration"

DIALECTS = frozenset({"oq3", "quir", "qcs", "pulse", "scf", "func", "builtin"})

# Annotations any op may carry (set by scheduling).
GLOBAL_OPT_ATTRS = {"start_time": AttrKind.INT}


def registry() -> dict[str, OpSignature]:
    """The complete op registry (a copy; the registry itself is immutable)."""
    return dict(_REGISTRY)


def lookup(name: str) -> Optional[OpSignature]:
    return _REGISTRY.get(name)


def is_quantum(name: str) -> bool:
    sig = _REGISTRY.get(name)
    return sig is not None and Trait.QUANTUM in sig.traits


# Casts the verifier accepts, as (from-kind, to-kind) pairs; widths must
# agree where both sides have one, except angle/f64 conversions.
ALLOWED_CASTS = frozenset([
    (TypeKind.CBIT, TypeKind.INT),
    (TypeKind.INT, TypeKind.CBIT),
    (TypeKind.ANGLE, TypeKind.F64),
    (TypeKind.F64, TypeKind.ANGLE),
    (TypeKind.INT, TypeKind.INT),
])


def cast_allowed(src: IrType, dst: IrType) -> bool:
    pair = (src.kind, dst.kind)
    if pair not in ALLOWED_CASTS:
        return False
    if src.kind in (TypeKind.CBIT, TypeKind.INT) and \
            dst.kind in (TypeKind.CBIT, TypeKind.INT):
        return src.width == dst.width
    return True
