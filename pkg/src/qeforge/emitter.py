"""Mock-ISA binary emission: the per-instrument (phase 2) pipelines.

Binary format (MockBinary): header line `QEMOCK/1`, one instruction per
line `idx: OPCODE arg...`, then `PATCH <symbol> <line-idx> <arg-idx>`
lines for every instruction argument fed by a job parameter. Opcodes:

    INIT FINI LOOP n END_LOOP SHOT_INIT
    DELAY samples [frame]           PLAY wf frame
    SHIFT_PHASE frame millirad      SET_PHASE frame millirad
    SHIFT_FREQ frame millihertz     SET_FREQ frame millihertz
    ACQ frame bit   BCAST bit   RECV bit
    BR_IF reg target   JMP target
    MOV rd src   AND rd ra rb   OR rd ra rb   XOR rd ra rb

Classical values are bit-granular registers (an i2 value is two one-bit
registers), so cbit math needs nothing beyond MOV/AND/OR/XOR. Phases are
encoded as integer milliradians, frequencies as millihertz, both rounded
half away from zero, which keeps parameter patching bit-exact.

Waveforms are deduplicated per instrument into `<uid>.waveforms.json`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from qeforge.diagnostics import Category, Diagnostic, error
from qeforge.ir.core import IrModule, Operation, Value
from qeforge.ir.printer import print_module
from qeforge.ir.types import TypeKind
from qeforge.passes.schedule import duration_samples, round_half_away

_PHASE_OPS = {"pulse.shift_phase": "SHIFT_PHASE", "pulse.set_phase": "SET_PHASE"}
_FREQ_OPS = {"pulse.shift_frequency": "SHIFT_FREQ",
             "pulse.set_frequency": "SET_FREQ"}

_ROLE_FORBIDDEN = {
    "drive": ("pulse.capture", "builtin.memory_load", "builtin.memory_store"),
    "acquire": ("builtin.memory_load", "builtin.memory_store"),
    "hub": ("pulse.play", "pulse.capture", "pulse.delay",
            "pulse.shift_phase", "pulse.set_phase"),
}


@dataclass
class PatchSite:
    symbol: str
    line: int
    arg: int


@dataclass
class EmitResult:
    binary: str
    waveforms: dict            # wf id -> sample pairs
    patches: list              # PatchSite
    parameters: dict           # symbol -> (type str, effective default)
    diagnostics: list = field(default_factory=list)


def encode_phase(value: float) -> int:
    return round_half_away(value * 1000.0)


def encode_frequency(value: float) -> int:
    return round_half_away(value * 1000.0)


class _Emitter:
    def __init__(self, module: IrModule, role: str, dt: float,
                 overrides: dict):
        self.module = module
        self.role = role
        self.dt = dt
        self.overrides = overrides
        self.instrs: list[list] = []
        self.diags: list[Diagnostic] = []
        self.frame_ids: dict[Value, int] = {}
        self.waveform_data: dict[int, tuple] = {}
        self.waveform_ids: dict[tuple, int] = {}
        self.wf_of_value: dict[Value, int] = {}
        self.regs: dict[Value, str] = {}
        self.named_bits: dict[Value, str] = {}  # recv results: one register
        self.pending_consts: dict[Value, int] = {}
        self.reg_count = 0
        self.patches: list[PatchSite] = []
        self.parameters: dict[str, tuple] = {}
        self.param_defaults: dict[str, tuple] = {}
        self.defs: dict[Value, Operation] = {}
        self.global_widths: dict[str, int] = {}

    class _Abort(Exception):
        pass

    def err(self, message: str,
            category: Category = Category.TYPE_MISMATCH) -> "._Abort":
        self.diags.append(error(category, message, None, "emit"))
        return self._Abort()

    def emit(self, op_name: str, *args) -> int:
        self.instrs.append([op_name, *args])
        return len(self.instrs) - 1

    # -- value helpers ----------------------------------------------------------

    def reg(self, value: Value) -> str:
        name = self.regs.get(value)
        if name is None:
            name = f"r{self.reg_count}"
            self.reg_count += 1
            self.regs[value] = name
        return name

    def bit_regs(self, value: Value) -> list[str]:
        width = value.type.width or 1
        base = self.reg(value)
        return [f"{base}.{k}" for k in range(width)]

    def frame_id(self, value: Value, env: dict) -> int:
        while value in env:
            value = env[value]
        fid = self.frame_ids.get(value)
        if fid is None:
            raise self.err("pulse op uses an unknown mixed frame")
        return fid

    def waveform_id(self, value: Value, env: dict) -> int:
        while value in env:
            value = env[value]
        wid = self.wf_of_value.get(value)
        if wid is None:
            raise self.err("play of an unknown waveform")
        return wid

    def resolve_f64(self, value: Value, env: dict):
        """(float value, parameter symbol or None) for an f64 operand,
        chasing casts, constants and sequence-argument bindings."""
        seen = 0
        while True:
            seen += 1
            if seen > 64:
                raise self.err("f64 operand chain is circular")
            if value in env:
                value = env[value]
                continue
            defining = self.defs.get(value)
            if defining is None:
                raise self.err("cannot resolve an f64 operand to a constant "
                               "or parameter")
            if defining.name in ("builtin.float_const",):
                return float(defining.attr("value")), None
            if defining.name == "quir.constant":
                return float(defining.attr("value").value), None
            if defining.name == "oq3.cast":
                value = defining.operands[0]
                continue
            if defining.name == "qcs.parameter_load":
                symbol = defining.symbol_name
                default = self.param_defaults.get(symbol, ("angle", 0.0))
                effective = self.overrides.get(symbol, default[1])
                self.parameters[symbol] = (default[0], effective)
                return float(effective), symbol
            raise self.err(f"cannot resolve f64 operand defined by "
                           f"{defining.name}")

    def duration_value(self, value: Value, env: dict) -> int:
        while value in env:
            value = env[value]
        defining = self.defs.get(value)
        if defining is None or defining.name != "quir.constant":
            raise self.err("cannot resolve a delay duration")
        attr = defining.attr("value")
        return duration_samples(attr.value, attr.unit, self.dt)

    # -- entry ---------------------------------------------------------------------

    def run(self) -> EmitResult:
        for op in self.module.walk():
            for res in op.results:
                self.defs[res] = op
        for op in self.module.block.ops:
            if op.name == "qcs.declare_parameter":
                default = op.attr("default")
                value = getattr(default, "value", default)
                ty = op.attr("type")
                kind = "angle" if ty.kind is TypeKind.ANGLE else "int"
                self.param_defaults[op.symbol_name] = (kind, float(value))
            elif op.name == "builtin.global_memory":
                self.global_widths[op.symbol_name] = op.attr("type").width
        main = self.module.find_symbol("main")
        if main is None:
            raise self.err("localized module has no @main",
                           Category.INTERNAL_ERROR)
        try:
            self.emit_block(main.body().ops, {})
        except self._Abort:
            pass
        lines = ["QEMOCK/1"]
        for idx, instr in enumerate(self.instrs):
            args = " ".join(str(a) for a in instr[1:])
            lines.append(f"{idx}: {instr[0]}{(' ' + args) if args else ''}")
        for site in self.patches:
            lines.append(f"PATCH {site.symbol} {site.line} {site.arg}")
        return EmitResult("\n".join(lines) + "\n",
                          {k: list(map(list, v))
                           for k, v in self.waveform_data.items()},
                          self.patches, self.parameters, self.diags)

    # -- structure -----------------------------------------------------------------

    def emit_block(self, ops, env: dict) -> None:
        for op in ops:
            self.emit_op(op, env)

    def emit_op(self, op: Operation, env: dict) -> None:
        name = op.name
        if name in _ROLE_FORBIDDEN.get(self.role, ()):
            raise self.err(f"UnsupportedOpForRole: {name} cannot run on a "
                           f"{self.role} instrument")
        if name == "qcs.init":
            self.emit("INIT")
            for sym in sorted(self.global_widths):
                for k in range(self.global_widths[sym]):
                    self.emit("MOV", f"g.{sym}.{k}", 0)
            return
        if name == "qcs.finalize":
            self.emit("FINI")
            return
        if name == "qcs.shot_init":
            self.emit("SHOT_INIT")
            return
        if name == "scf.for":
            self.emit("LOOP", self.loop_iterations(op))
            self.emit_block(op.body().ops, env)
            self.emit("END_LOOP")
            return
        if name == "scf.if":
            self.emit_if(op, env)
            return
        if name == "qcs.parallel_control_flow":
            self.emit_block(op.body().ops, env)
            return
        if name == "quir.delay":
            self.emit("DELAY", self.duration_value(op.operands[0], env))
            return
        if name == "pulse.delay":
            self.emit("DELAY", self.duration_value(op.operands[0], env),
                      self.frame_id(op.operands[1], env))
            return
        if name == "pulse.mix_frame":
            self.frame_ids[op.results[0]] = len(self.frame_ids)
            return
        if name in ("pulse.port", "pulse.frame"):
            return
        if name == "pulse.create_waveform":
            samples = op.attr("samples")
            wid = self.waveform_ids.get(samples)
            if wid is None:
                wid = len(self.waveform_ids)
                self.waveform_ids[samples] = wid
                self.waveform_data[wid] = samples
            self.wf_of_value[op.results[0]] = wid
            return
        if name == "pulse.play":
            self.emit("PLAY", self.waveform_id(op.operands[1], env),
                      self.frame_id(op.operands[0], env))
            return
        if name == "pulse.capture":
            self.emit("ACQ", self.frame_id(op.operands[0], env),
                      op.attr("bit", 0))
            return
        if name in _PHASE_OPS or name in _FREQ_OPS:
            value, symbol = self.resolve_f64(op.operands[1], env)
            encoded = (encode_phase(value) if name in _PHASE_OPS
                       else encode_frequency(value))
            opcode = _PHASE_OPS.get(name) or _FREQ_OPS[name]
            line = self.emit(opcode, self.frame_id(op.operands[0], env), encoded)
            if symbol is not None:
                self.patches.append(PatchSite(symbol, line, 1))
            return
        if name == "pulse.call_sequence":
            self.emit_call(op, env)
            return
        if name == "qcs.recv":
            self.emit("RECV", op.attr("bit", 0))
            self.named_bits[op.results[0]] = f"b{op.attr('bit', 0)}"
            return
        if name in ("qcs.broadcast", "qcs.send"):
            self.emit("BCAST", op.attr("bit", 0))
            return
        if name == "qcs.synchronize":
            return
        if name == "func.return":
            return
        if name.startswith("builtin.") or name in ("oq3.cast",
                                                   "qcs.parameter_load",
                                                   "quir.constant"):
            self.emit_classical(op, env)
            return
        if name == "pulse.return":
            return
        raise self.err(f"cannot emit {name} for a {self.role} instrument")

    def loop_iterations(self, op: Operation) -> int:
        bounds = []
        for operand in op.operands:
            defining = self.defs.get(operand)
            if defining is None or defining.name != "builtin.int_const":
                raise self.err("loop bounds must be integer constants")
            bounds.append(defining.attr("value"))
        lb, ub, step = bounds
        if step <= 0:
            raise self.err("loop step must be positive")
        return max(0, -(-(ub - lb) // step))

    def emit_if(self, op: Operation, env: dict) -> None:
        cond = self.named_bits.get(op.operands[0])
        if cond is None:
            cond = self.bit_regs(op.operands[0])[0]
        branch = self.emit("BR_IF", cond, None)
        self.emit_block(op.regions[1].blocks[0].ops, env)  # else first
        jump = self.emit("JMP", None)
        self.instrs[branch][2] = len(self.instrs)
        self.emit_block(op.regions[0].blocks[0].ops, env)
        self.instrs[jump][1] = len(self.instrs)

    def emit_call(self, op: Operation, env: dict) -> None:
        target = self.module.find_symbol(op.attr("callee").name)
        if target is None or target.name != "pulse.sequence":
            raise self.err(f"call to unknown sequence "
                           f"@{op.attr('callee').name}",
                           Category.UNKNOWN_SYMBOL)
        body = target.body()
        inner_env = dict(env)
        inner_env.update(zip(body.args, op.operands))
        self.emit_block(body.ops, inner_env)

    def emit_classical(self, op: Operation, env: dict) -> None:
        name = op.name
        if name in ("qcs.parameter_load", "oq3.cast", "quir.constant",
                    "builtin.float_const"):
            return  # value plumbing; resolved where consumed
        if name == "builtin.global_memory":
            return
        if name == "builtin.int_const":
            # Materialized lazily: loop bounds and return values never hit
            # the register file, only bit-math consumers do.
            self.pending_consts[op.results[0]] = op.attr("value")
            return
        if name == "builtin.memory_load":
            sym = op.symbol_name
            for k, rd in enumerate(self.bit_regs(op.results[0])):
                self.emit("MOV", rd, f"g.{sym}.{k}")
            return
        if name == "builtin.memory_store":
            sym = op.symbol_name
            src = self.src_bits(op.operands[0])
            for k in range(self.global_widths.get(sym, 1)):
                self.emit("MOV", f"g.{sym}.{k}", src[k])
            return
        if name in ("builtin.and", "builtin.or", "builtin.xor"):
            opcode = name.rsplit(".", 1)[1].upper()
            a = self.src_bits(op.operands[0])
            b = self.src_bits(op.operands[1])
            for k, rd in enumerate(self.bit_regs(op.results[0])):
                self.emit(opcode, rd, a[k], b[k])
            return
        if name == "builtin.shl":
            amount = op.attr("amount")
            src = self.src_bits(op.operands[0])
            for k, rd in enumerate(self.bit_regs(op.results[0])):
                self.emit("MOV", rd, src[k - amount] if k >= amount else 0)
            return
        if name == "builtin.lshr":
            amount = op.attr("amount")
            src = self.src_bits(op.operands[0])
            width = len(src)
            for k, rd in enumerate(self.bit_regs(op.results[0])):
                self.emit("MOV", rd,
                          src[k + amount] if k + amount < width else 0)
            return
        if name == "builtin.zext":
            src = self.src_bits(op.operands[0])
            for k, rd in enumerate(self.bit_regs(op.results[0])):
                self.emit("MOV", rd, src[k] if k < len(src) else 0)
            return
        if name == "builtin.trunc":
            src = self.src_bits(op.operands[0])
            for k, rd in enumerate(self.bit_regs(op.results[0])):
                self.emit("MOV", rd, src[k])
            return
        raise self.err(f"cannot emit classical op {name}")

    def src_bits(self, value: Value) -> list[str]:
        named = self.named_bits.get(value)
        if named is not None:
            return [named]
        if value in self.pending_consts:
            literal = self.pending_consts.pop(value)
            for k, rd in enumerate(self.bit_regs(value)):
                self.emit("MOV", rd, (literal >> k) & 1)
        return self.bit_regs(value)


def emit_instrument(module: IrModule, role: str, dt: float,
                    overrides: dict) -> EmitResult:
    emitter = _Emitter(module, role, dt, overrides)
    try:
        result = emitter.run()
    except _Emitter._Abort:
        result = EmitResult("", {}, [], {}, emitter.diags)
    result.diagnostics = emitter.diags
    return result


def run_instrument_pipeline(node, module: IrModule, payload, dt: float,
                            overrides: dict) -> list:
    """Apply the role pipeline to a localized module and add `<uid>.bin`,
    `<uid>.qeir` (debug IR) and waveform side files to the payload;
    diagnostics are appended to the node's list."""
    result = emit_instrument(module, node.instrument_role, dt, overrides)
    node.diagnostics.extend(result.diagnostics)
    if any(d.is_error for d in result.diagnostics):
        return result.diagnostics
    payload.add_entry(f"{node.uid}.bin", result.binary.encode("utf-8"))
    payload.add_entry(f"{node.uid}.qeir",
                      print_module(module).encode("utf-8"))
    if result.waveforms:
        blob = json.dumps(result.waveforms, sort_keys=True,
                          separators=(",", ":")).encode("utf-8")
        payload.add_entry(f"{node.uid}.waveforms.json", blob)
    node.emit_result = result
    return result.diagnostics
