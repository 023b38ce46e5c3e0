"""Pulse lowering: quantum circuits become pulse sequences built from the
target's calibrations.

Each circuit is split at embedded control flow (the reset expansion puts
parallel_control_flow inside circuits); every straight-line chunk becomes
one pulse.sequence whose body concatenates the inlined calibration bodies
of its ops, and the call site is rebuilt as call_sequence ops interleaved
with the control flow. Measure results become capture results; angle
operands flow in as f64 sequence parameters (literals inline as
constants). Ports, frames and mixed frames are copied from the
calibration defs module to the head of @main. Gate functions and every
quir.circuit are deleted once all call sites are lowered.
"""

from __future__ import annotations

from dataclasses import dataclass

from qeforge.diagnostics import Category, Diagnostic, error
from qeforge.ir.core import Block, IrModule, Operation, Region, Value, clone_op
from qeforge.ir import types as T
from qeforge.ir.types import DurationAttr, SymbolAttr, TypeKind
from qeforge.passes import Pass, PassContext

_CONTROL_FLOW_IN_CIRCUIT = ("qcs.parallel_control_flow", "scf.if")


class _LowerError(Exception):
    pass


@dataclass
class _SeqResult:
    """One lowered straight-line chunk."""
    name: str
    frame_uids: list
    param_values: list            # main-level angle values (need f64 casts)
    capture_map: dict             # circuit-level measure result -> result idx
    returned: list                # capture values in return order
    op: Operation                 # the pulse.sequence


class _PulseLowerer:
    def __init__(self, module: IrModule, ctx: PassContext):
        self.module = module
        self.cals = ctx.calibrations
        self.diags: list[Diagnostic] = []
        self.new_sequences: list[Operation] = []
        self.seq_names: set = set()
        self.bit_counter = 0
        self.mf_values: dict[str, Value] = {}   # uid -> value in main
        self.main_defs: dict[Value, Operation] = {}

    def err(self, message: str,
            category: Category = Category.MISSING_CALIBRATION) -> _LowerError:
        self.diags.append(error(category, message, None, "lower-to-pulse"))
        return _LowerError()

    # -- entry ----------------------------------------------------------------

    def run(self) -> list[Diagnostic]:
        if self.cals is None:
            self.diags.append(error(Category.CONFIG_ERROR,
                                    "pulse lowering needs calibrations",
                                    None, "lower-to-pulse"))
            return self.diags
        main = self.module.find_symbol("main")
        if main is None or main.name != "func.func":
            self.diags.append(error(Category.UNKNOWN_SYMBOL,
                                    "module has no @main function", None,
                                    "lower-to-pulse"))
            return self.diags
        self.copy_pulse_defs(main)
        self.index_defs(main)
        try:
            self.lower_block(main.body(), {})
        except _LowerError:
            return self.diags
        self.cleanup()
        self.module.block.ops.extend(self.new_sequences)
        return self.diags

    def copy_pulse_defs(self, main: Operation) -> None:
        """Clone port/frame/mix_frame defs from the calibration module into
        the head of @main, keyed by uid."""
        header: list[Operation] = []
        value_map: dict[Value, Value] = {}
        for op in self.cals.defs.block.ops:
            if op.name in ("pulse.port", "pulse.frame", "pulse.mix_frame"):
                clone = clone_op(op, value_map, self.module)
                header.append(clone)
                uid = clone.attr("uid")
                if op.name == "pulse.mix_frame" and uid:
                    self.mf_values[uid] = clone.results[0]
        main.body().ops[0:0] = header

    def index_defs(self, main: Operation) -> None:
        for op in main.walk():
            for res in op.results:
                self.main_defs[res] = op

    # -- main traversal ---------------------------------------------------------

    def lower_block(self, block: Block, subst: dict) -> None:
        out: list[Operation] = []
        for op in block.ops:
            for i, v in enumerate(op.operands):
                if v in subst:
                    op.operands[i] = subst[v]
            if op.name == "quir.call_circuit":
                out.extend(self.expand_call(op, subst))
                continue
            if op.name == "quir.delay" and len(op.operands) > 1:
                out.extend(self.lower_main_delay(op))
                continue
            if op.name == "quir.barrier":
                out.extend(self.lower_main_barrier(op))
                continue
            out.append(op)
            for region in op.regions:
                for inner in region.blocks:
                    self.lower_block(inner, subst)
        block.ops = out

    def lower_main_delay(self, op: Operation) -> list[Operation]:
        dur = op.operands[0]
        ops: list[Operation] = []
        for qid in self.qubit_ids_of(op.operands[1:], {}):
            for uid in self.cals.qubit_frames(qid):
                ops.append(Operation("pulse.delay",
                                     [dur, self.mf_value(uid)]))
        return ops

    def lower_main_barrier(self, op: Operation) -> list[Operation]:
        mfs = []
        for qid in self.qubit_ids_of(op.operands, {}):
            for uid in self.cals.qubit_frames(qid):
                value = self.mf_value(uid)
                if value not in mfs:
                    mfs.append(value)
        return [Operation("pulse.barrier", mfs)] if mfs else []

    def mf_value(self, uid: str) -> Value:
        value = self.mf_values.get(uid)
        if value is None:
            raise self.err(f"calibration uses unknown mixed frame {uid!r}",
                           Category.CONFIG_ERROR)
        return value

    # -- qubit/angle tracing ------------------------------------------------------

    def qubit_ids_of(self, values, binding: dict) -> list[int]:
        return [self.qubit_id(v, binding) for v in values]

    def qubit_id(self, value: Value, binding: dict) -> int:
        while value in binding:
            value = binding[value]
        op = self.main_defs.get(value)
        if op is None or op.name != "quir.declare_qubit":
            raise self.err("cannot trace a qubit operand to a physical "
                           "qubit declaration")
        return op.attr("id")

    # -- circuit expansion ---------------------------------------------------------

    def expand_call(self, call: Operation, subst: dict) -> list[Operation]:
        circuit = self.module.find_symbol(call.attr("callee").name)
        if circuit is None or circuit.name != "quir.circuit":
            raise self.err(f"call_circuit target @{call.attr('callee').name} "
                           f"is not a circuit", Category.UNKNOWN_SYMBOL)
        body = circuit.body()
        binding = dict(zip(body.args, call.operands))

        # In-circuit defs: constants usable as literals, measures for wiring.
        circuit_defs: dict[Value, Operation] = {}
        for op in circuit.walk():
            for res in op.results:
                circuit_defs[res] = op

        # Split the body into straight-line segments and control-flow ops.
        pieces: list[tuple[str, list]] = []
        current: list[Operation] = []
        for op in body.ops:
            if op.name == "quir.return":
                break
            if op.name in _CONTROL_FLOW_IN_CIRCUIT:
                if current:
                    pieces.append(("seq", current))
                    current = []
                pieces.append(("cf", [op]))
            else:
                current.append(op)
        if current:
            pieces.append(("seq", current))
        if not pieces:
            pieces.append(("seq", []))  # empty circuit -> empty sequence

        base = circuit.symbol_name
        multi = sum(1 for kind, _ in pieces if kind == "seq") > 1 or \
            any(kind == "cf" for kind, _ in pieces)
        out: list[Operation] = []
        capture_values: dict[Value, Value] = {}  # measure result -> call result
        seq_index = 0
        for kind, piece in pieces:
            if kind == "seq":
                name = f"{base}_s{seq_index}" if multi else base
                seq_index += 1
                ops = self.lower_segment(name, piece, binding, circuit_defs,
                                         capture_values)
                out.extend(ops)
            else:
                out.extend(self.rebuild_control_flow(
                    piece[0], base, binding, circuit_defs, capture_values,
                    seq_counter=[seq_index]))
                seq_index += 1

        # Map the circuit's returned values to capture call results.
        ret = body.ops[-1] if body.ops and body.ops[-1].name == "quir.return" \
            else None
        if ret is not None:
            for old, circuit_value in zip(call.results, ret.operands):
                new = capture_values.get(circuit_value)
                if new is None:
                    raise self.err(
                        f"circuit @{base} returns a value that is not a "
                        f"measurement", Category.TYPE_MISMATCH)
                subst[old] = new
        return out

    def rebuild_control_flow(self, op: Operation, base: str, binding: dict,
                             circuit_defs: dict, capture_values: dict,
                             seq_counter: list) -> list[Operation]:
        """Re-create parallel_control_flow / scf.if at the call site; the
        branch bodies' quantum chunks become their own sequences."""
        if op.name == "qcs.parallel_control_flow":
            members: list[Operation] = []
            for inner in op.body().ops:
                members.extend(self.rebuild_control_flow(
                    inner, base, binding, circuit_defs, capture_values,
                    seq_counter))
            return [Operation("qcs.parallel_control_flow",
                              regions=[Region([Block(ops=members)])])]
        if op.name == "scf.if":
            cond = op.operands[0]
            while cond in binding:
                cond = binding[cond]
            mapped = capture_values.get(cond, cond)
            branches = []
            for region in op.regions:
                branch_ops: list[Operation] = []
                chunk: list[Operation] = []
                for inner in region.blocks[0].ops:
                    if inner.name in _CONTROL_FLOW_IN_CIRCUIT:
                        if chunk:
                            branch_ops.extend(self.flush_chunk(
                                base, chunk, binding, circuit_defs,
                                capture_values, seq_counter))
                            chunk = []
                        branch_ops.extend(self.rebuild_control_flow(
                            inner, base, binding, circuit_defs,
                            capture_values, seq_counter))
                    else:
                        chunk.append(inner)
                if chunk:
                    branch_ops.extend(self.flush_chunk(
                        base, chunk, binding, circuit_defs, capture_values,
                        seq_counter))
                branches.append(Region([Block(ops=branch_ops)]))
            return [Operation("scf.if", [mapped], regions=branches)]
        raise self.err(f"unsupported control flow {op.name} inside a circuit",
                       Category.TYPE_MISMATCH)

    def flush_chunk(self, base, chunk, binding, circuit_defs, capture_values,
                    seq_counter) -> list[Operation]:
        name = f"{base}_s{seq_counter[0]}"
        seq_counter[0] += 1
        return self.lower_segment(name, chunk, binding, circuit_defs,
                                  capture_values)

    # -- segment lowering -----------------------------------------------------------

    def lower_segment(self, name: str, ops: list[Operation], binding: dict,
                      circuit_defs: dict, capture_values: dict) -> list[Operation]:
        """Lower one straight-line chunk into a sequence plus its call."""
        while name in self.seq_names:
            name += "x"
        self.seq_names.add(name)

        frame_uids: list[str] = []
        body = Block()
        formal_mfs: dict[str, Value] = {}
        params: list[tuple[Value, Value]] = []  # (main angle value, formal)
        param_formals: dict[Value, Value] = {}
        measure_captures: list[tuple[Value, Value]] = []  # (circ result, capture)

        def formal_mf(uid: str) -> Value:
            if uid not in formal_mfs:
                formal_mfs[uid] = self.module.new_value(T.mixed_frame())
                frame_uids.append(uid)
            return formal_mfs[uid]

        def angle_input(value: Value) -> Value:
            """f64 value inside the sequence for a circuit-level angle."""
            defining = circuit_defs.get(value)
            if defining is not None and defining.name == "quir.constant":
                const = self.module.make_op(
                    "builtin.float_const", result_types=[T.f64()],
                    attrs={"value": float(defining.attr("value").value)})
                body.ops.append(const)
                return const.results[0]
            outer = value
            while outer in binding:
                outer = binding[outer]
            if outer not in param_formals:
                formal = self.module.new_value(T.f64())
                param_formals[outer] = formal
                params.append((outer, formal))
            return param_formals[outer]

        def duration_of(value: Value):
            defining = circuit_defs.get(value)
            if defining is None:
                outer = value
                while outer in binding:
                    outer = binding[outer]
                defining = self.main_defs.get(outer)
            if defining is None or defining.name != "quir.constant":
                raise self.err("cannot resolve a delay duration",
                               Category.SCHEDULE_ERROR)
            attr = defining.attr("value")
            const = self.module.make_op(
                "quir.constant", result_types=[T.duration(attr.unit)],
                attrs={"value": DurationAttr(attr.value, attr.unit)})
            body.ops.append(const)
            return const.results[0]

        for op in ops:
            if op.name == "quir.constant":
                continue  # literals inline at their uses
            if op.name == "quir.delay":
                dur = duration_of(op.operands[0])
                for qid in self.qubit_ids_of(op.operands[1:], binding):
                    for uid in self.cals.qubit_frames(qid):
                        body.ops.append(Operation(
                            "pulse.delay", [dur, formal_mf(uid)]))
                continue
            if op.name == "quir.barrier":
                mfs: list[Value] = []
                for qid in self.qubit_ids_of(op.operands, binding):
                    for uid in self.cals.qubit_frames(qid):
                        mf = formal_mf(uid)
                        if mf not in mfs:
                            mfs.append(mf)
                if mfs:
                    body.ops.append(Operation("pulse.barrier", mfs))
                continue
            gate, qids, angle_values = self.describe_quantum_op(op, binding)
            entry = self.cals.lookup(gate, qids)
            if entry is None:
                raise self.err(f"no calibration for {gate} on qubits "
                               f"{list(qids)}")
            # Serialize against everything previously played on these
            # qubits: a barrier across all their frames orders the inlined
            # body after prior gates/measures on any of the qubit's frames.
            fence: list[Value] = []
            for qid in qids:
                for uid in self.cals.qubit_frames(qid):
                    mf = formal_mf(uid)
                    if mf not in fence:
                        fence.append(mf)
            if fence:
                body.ops.append(Operation("pulse.barrier", fence))
            captures = self.inline_calibration(
                body, entry, [formal_mf(u) for u in entry.frame_uids],
                [angle_input(v) for v in angle_values])
            if op.name == "quir.measure":
                if len(captures) != 1:
                    raise self.err(f"calibration @{entry.sequence} must "
                                   f"produce exactly one capture",
                                   Category.CONFIG_ERROR)
                measure_captures.append((op.results[0], captures[0]))

        # Captures flow out of the sequence; callers decide what they feed.
        returned = [cap for _, cap in measure_captures]
        body.ops.append(Operation("pulse.return", returned))
        arg_order = [formal_mfs[u] for u in frame_uids] + \
            [formal for _, formal in params]
        body.args = arg_order

        seq = Operation("pulse.sequence",
                        attrs={"sym_name": SymbolAttr(name),
                               "frames": ",".join(frame_uids)},
                        regions=[Region([body])])
        self.new_sequences.append(seq)

        # Call site: mixed frames from main's defs, casts for angle params.
        site: list[Operation] = []
        operands = [self.mf_value(u) for u in frame_uids]
        for outer_value, _formal in params:
            cast = self.module.make_op("oq3.cast", [outer_value],
                                       result_types=[T.f64()])
            site.append(cast)
            operands.append(cast.results[0])
        call = Operation(
            "pulse.call_sequence", operands,
            [self.module.new_value(T.i1()) for _ in returned],
            attrs={"callee": SymbolAttr(name)})
        site.append(call)
        for (circ_value, _), result in zip(measure_captures, call.results):
            capture_values[circ_value] = result
        return site

    def describe_quantum_op(self, op: Operation, binding: dict):
        """(gate name, physical qubit ids, angle operand values)."""
        if op.name == "quir.builtin_U":
            return "U", tuple(self.qubit_ids_of(op.operands[:1], binding)), \
                list(op.operands[1:4])
        if op.name == "quir.builtin_CX":
            return "CX", tuple(self.qubit_ids_of(op.operands, binding)), []
        if op.name == "quir.measure":
            return "measure", tuple(self.qubit_ids_of(op.operands, binding)), []
        if op.name == "quir.reset":
            return "reset", tuple(self.qubit_ids_of(op.operands, binding)), []
        if op.name == "quir.call_gate":
            angles = [v for v in op.operands
                      if v.type.kind is TypeKind.ANGLE]
            qubits = [v for v in op.operands
                      if v.type.kind is TypeKind.QUBIT]
            return op.attr("callee").name, \
                tuple(self.qubit_ids_of(qubits, binding)), angles
        raise self.err(f"cannot lower {op.name} to pulses",
                       Category.TYPE_MISMATCH)

    def inline_calibration(self, body: Block, entry, mf_args: list,
                           angle_args: list) -> list[Value]:
        """Clone a calibration sequence body into `body`; returns the
        values its pulse.return yielded (capture results)."""
        seq = self.cals.defs.find_symbol(entry.sequence)
        cal_body = seq.body()
        expected = len(entry.frame_uids) + len(angle_args)
        if len(cal_body.args) != expected:
            raise self.err(
                f"calibration @{entry.sequence} takes {len(cal_body.args)} "
                f"arguments; the op supplies {expected}",
                Category.CONFIG_ERROR)
        value_map: dict[Value, Value] = dict(
            zip(cal_body.args, mf_args + angle_args))
        returned: list[Value] = []
        for op in cal_body.ops:
            if op.name == "pulse.return":
                returned = [value_map[v] for v in op.operands]
                break
            clone = clone_op(op, value_map, self.module)
            if clone.name == "pulse.capture":
                clone.attrs["bit"] = self.bit_counter
                self.bit_counter += 1
            body.ops.append(clone)
        return returned

    # -- cleanup -----------------------------------------------------------------

    def cleanup(self) -> None:
        self.module.block.ops = [
            op for op in self.module.block.ops
            if not (op.name == "quir.circuit" or
                    (op.name == "func.func" and op.symbol_name != "main"))]


def run_lower_to_pulse(module: IrModule, ctx: PassContext) -> list:
    return _PulseLowerer(module, ctx).run()


lower_to_pulse = Pass("lower-to-pulse", run_lower_to_pulse)
