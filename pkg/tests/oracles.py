"""Independent test oracles.

Deliberately re-derive everything from first principles (brute force over
attributes and op lists) instead of calling the implementation paths they
check.
"""

from __future__ import annotations

from qeforge.ir.core import IrModule, Operation

QUANTUM_OPS = {
    "quir.builtin_U", "quir.builtin_CX", "quir.reset", "quir.measure",
    "quir.barrier", "quir.delay", "quir.call_gate",
}
TIMING_ONLY = {"quir.delay", "quir.barrier"}
TRANSPARENT = {
    "quir.constant", "builtin.int_const", "builtin.float_const",
    "qcs.parameter_load", "oq3.cast", "oq3.variable_assign",
    "oq3.cbit_assign_bit", "builtin.memory_store",
}


def expected_runs(ops: list[Operation]) -> list[list[str]]:
    """Reference partition of a block into extractable quantum runs.

    Quantum ops form a run; transparent pure bookkeeping between quantum
    ops does not break it; anything else does. Runs of nothing but timing
    ops do not become circuits.
    """
    runs: list[list[str]] = []
    current: list[str] = []
    pending: list[str] = []

    def flush():
        nonlocal current, pending
        if current and any(name not in TIMING_ONLY for name in current):
            runs.append(current)
        current = []
        pending = []

    for op in ops:
        if op.name in QUANTUM_OPS:
            current.extend(pending)
            pending = []
            current.append(op.name)
        elif op.name in TRANSPARENT and current:
            pending.append("")  # bridged; not circuit content
        else:
            flush()
    flush()
    return [[name for name in run if name] for run in runs]


def circuits_in(module: IrModule) -> dict[str, list[str]]:
    out = {}
    for op in module.block.ops:
        if op.name == "quir.circuit":
            out[op.symbol_name] = [o.name for o in op.body().ops[:-1]]
    return out


# -- schedule legality ---------------------------------------------------------

def sequence_intervals(seq: Operation, dt: float) -> dict[str, list]:
    """mixed-frame-uid (or arg index) -> [(start, end, op name)] from the
    start_time annotations, recomputing durations independently."""
    body = seq.body()
    uids = [u for u in (seq.attr("frames") or "").split(",") if u]
    lengths = {}
    constants = {}
    for op in body.ops:
        if op.name == "pulse.create_waveform":
            lengths[op.results[0]] = len(op.attr("samples"))
        elif op.name == "quir.constant":
            constants[op.results[0]] = op.attr("value")
    arg_key = {}
    mf_index = 0
    for arg in body.args:
        if arg.type.kind.value == "mixed_frame":
            arg_key[arg] = uids[mf_index] if mf_index < len(uids) \
                else f"arg{mf_index}"
            mf_index += 1
    intervals: dict[str, list] = {}
    unit_scale = {"dt": None, "ns": 1e-9, "us": 1e-6, "ms": 1e-3, "s": 1.0}
    for op in body.ops:
        if op.name == "pulse.play":
            mf, dur = op.operands[0], lengths[op.operands[1]]
        elif op.name == "pulse.capture":
            mf, dur = op.operands[0], op.attr("duration", 0)
        elif op.name == "pulse.delay":
            const = constants[op.operands[0]]
            scale = unit_scale[const.unit]
            raw = const.value if scale is None else const.value * scale / dt
            dur = int(raw + 0.5) if raw >= 0 else -int(-raw + 0.5)
            mf = op.operands[1]
        else:
            continue
        start = op.attr("start_time")
        assert start is not None, f"{op.name} in @{seq.symbol_name} unscheduled"
        key = arg_key.get(mf, "local")
        intervals.setdefault(key, []).append((start, start + dur, op.name))
    return intervals


def assert_no_overlaps(seq: Operation, dt: float) -> None:
    for key, spans in sequence_intervals(seq, dt).items():
        ordered = sorted(spans)
        for (s1, e1, n1), (s2, e2, n2) in zip(ordered, ordered[1:]):
            assert e1 <= s2, (
                f"@{seq.symbol_name} frame {key}: {n1} [{s1},{e1}) overlaps "
                f"{n2} [{s2},{e2})")


def scheduled_sequences(module: IrModule) -> list[Operation]:
    return [op for op in module.block.ops if op.name == "pulse.sequence"]


# -- localization partition ------------------------------------------------------

def timed_op_multiset(module: IrModule, kinds=("pulse.play",
                                               "pulse.capture")) -> list:
    """Multiset fingerprint of scheduled plays/captures in a module."""
    out = []
    for seq in scheduled_sequences(module):
        uids = [u for u in (seq.attr("frames") or "").split(",") if u]
        body = seq.body()
        arg_key = {}
        mf_index = 0
        for arg in body.args:
            if arg.type.kind.value == "mixed_frame":
                arg_key[arg] = uids[mf_index] if mf_index < len(uids) else "?"
                mf_index += 1
        lengths = {op.results[0]: len(op.attr("samples"))
                   for op in body.ops if op.name == "pulse.create_waveform"}
        for op in body.ops:
            if op.name not in kinds:
                continue
            mf = op.operands[0]
            extra = lengths.get(op.operands[1]) if op.name == "pulse.play" \
                else op.attr("bit")
            out.append((seq.symbol_name, op.name, arg_key.get(mf, "?"),
                        op.attr("start_time"), extra))
    return sorted(out)


# -- reset grouping -------------------------------------------------------------

def expected_reset_groups(names_and_qubits: list) -> list[int]:
    """Group sizes for a [(is_reset, qubit_id)] trace, merging consecutive
    resets on distinct qubits only."""
    sizes = []
    current: set = set()

    def flush():
        if current:
            sizes.append(len(current))

    for is_reset, qubit in names_and_qubits:
        if not is_reset:
            flush()
            current = set()
        elif qubit in current:
            flush()
            current = {qubit}
        else:
            current.add(qubit)
    flush()
    return sizes


# -- mini interpreter -------------------------------------------------------------

class Interpreter:
    """Executes the classical/control-flow subset of a module's @main.

    Measurements consume bits from `measurements` in execution order
    (captures count as measurements at the pulse level). The final
    variable memory is the observable result.
    """

    def __init__(self, module: IrModule, measurements: list):
        self.module = module
        self.stream = list(measurements)
        self.cursor = 0
        self.memory: dict[str, int] = {}
        self.widths: dict[str, int] = {}
        self.symbols = module.symbol_table()

    def next_bit(self) -> int:
        bit = self.stream[self.cursor % len(self.stream)]
        self.cursor += 1
        return bit

    def run(self) -> dict:
        for op in self.module.block.ops:
            if op.name == "oq3.declare_variable":
                width = op.attr("type").width or 1
                self.memory[op.symbol_name] = 0
                self.widths[op.symbol_name] = width
            elif op.name == "builtin.global_memory":
                self.memory[op.symbol_name] = op.attr("initial")
                self.widths[op.symbol_name] = op.attr("type").width
        main = self.symbols.get("main")
        assert main is not None
        self.exec_block(main.body().ops, {})
        return dict(self.memory)

    def exec_block(self, ops, env: dict):
        for op in ops:
            self.exec_op(op, env)

    def exec_op(self, op: Operation, env: dict) -> None:
        name = op.name
        if name == "quir.measure" or name == "pulse.capture":
            env[op.results[0]] = self.next_bit()
        elif name == "quir.constant":
            env[op.results[0]] = op.attr("value")
        elif name in ("builtin.int_const",):
            env[op.results[0]] = op.attr("value")
        elif name == "builtin.float_const":
            env[op.results[0]] = op.attr("value")
        elif name == "oq3.variable_assign":
            self.memory[op.symbol_name] = self.as_int(env, op.operands[0])
        elif name == "oq3.variable_load":
            env[op.results[0]] = self.memory[op.symbol_name]
        elif name == "oq3.cbit_assign_bit":
            index = op.attr("index")
            bit = self.as_int(env, op.operands[0]) & 1
            old = self.memory[op.symbol_name]
            self.memory[op.symbol_name] = (old & ~(1 << index)) | (bit << index)
        elif name == "oq3.cbit_extract_bit":
            value = self.as_int(env, op.operands[0])
            env[op.results[0]] = (value >> op.attr("index")) & 1
        elif name == "oq3.cast":
            env[op.results[0]] = env.get(op.operands[0], 0)
        elif name == "builtin.memory_store":
            self.memory[op.symbol_name] = self.as_int(env, op.operands[0])
        elif name == "builtin.memory_load":
            env[op.results[0]] = self.memory[op.symbol_name]
        elif name == "builtin.and":
            env[op.results[0]] = self.as_int(env, op.operands[0]) & \
                self.as_int(env, op.operands[1])
        elif name == "builtin.or":
            env[op.results[0]] = self.as_int(env, op.operands[0]) | \
                self.as_int(env, op.operands[1])
        elif name == "builtin.xor":
            env[op.results[0]] = self.as_int(env, op.operands[0]) ^ \
                self.as_int(env, op.operands[1])
        elif name == "builtin.shl":
            width = op.results[0].type.width
            env[op.results[0]] = (self.as_int(env, op.operands[0])
                                  << op.attr("amount")) & ((1 << width) - 1)
        elif name == "builtin.lshr":
            env[op.results[0]] = self.as_int(env, op.operands[0]) >> \
                op.attr("amount")
        elif name == "builtin.zext":
            env[op.results[0]] = self.as_int(env, op.operands[0])
        elif name == "builtin.trunc":
            width = op.results[0].type.width
            env[op.results[0]] = self.as_int(env, op.operands[0]) & \
                ((1 << width) - 1)
        elif name == "scf.if":
            if self.as_int(env, op.operands[0]) & 1:
                self.exec_block(op.regions[0].blocks[0].ops, env)
            else:
                self.exec_block(op.regions[1].blocks[0].ops, env)
        elif name == "scf.for":
            lb = self.as_int(env, op.operands[0])
            ub = self.as_int(env, op.operands[1])
            step = self.as_int(env, op.operands[2])
            block = op.regions[0].blocks[0]
            for i in range(lb, ub, step):
                env[block.args[0]] = i
                self.exec_block(block.ops, env)
        elif name == "qcs.parallel_control_flow":
            self.exec_block(op.regions[0].blocks[0].ops, env)
        elif name == "quir.call_circuit":
            target = self.symbols[op.attr("callee").name]
            inner = dict(zip(target.body().args,
                             [env.get(v, 0) for v in op.operands]))
            returned = self.exec_call(target, inner)
            for res, val in zip(op.results, returned):
                env[res] = val
        elif name == "func.call" or name == "quir.call_gate":
            pass  # gates have no classical effect
        elif name in ("quir.declare_qubit", "qcs.parameter_load"):
            env.setdefault(op.results[0] if op.results else None, 0)
        else:
            pass  # quantum/pulse/qcs plumbing has no memory effect

    def exec_call(self, target: Operation, env: dict) -> list:
        block = target.body()
        for op in block.ops[:-1]:
            self.exec_op(op, env)
        terminator = block.ops[-1]
        return [self.as_int(env, v) for v in terminator.operands]

    def as_int(self, env: dict, value) -> int:
        v = env.get(value, 0)
        return int(v) if not isinstance(v, float) else int(v)
