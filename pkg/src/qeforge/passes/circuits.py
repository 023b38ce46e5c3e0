"""Circuit extraction: outline maximal runs of quantum ops into
quir.circuit symbols, leaving one quir.call_circuit per run.

Runs consisting only of timing ops (delay/barrier) stay in place: the
shot-loop delay is timing glue, not circuit content. After this pass, no
gate/reset/measure exists outside a circuit body anywhere in the module.
"""

from __future__ import annotations

from qeforge import dialects
from qeforge.ir.core import Block, IrModule, Operation, Region, replace_uses
from qeforge.ir.types import SymbolAttr
from qeforge.ir.verifier import TIMING_ONLY_OPS
from qeforge.passes import Pass, PassContext


def _collect_uses(ops: list[Operation], counts: dict) -> None:
    for op in ops:
        for v in op.operands:
            counts[v] = counts.get(v, 0) + 1
        for region in op.regions:
            for block in region.blocks:
                _collect_uses(block.ops, counts)


# Pure value producers that may move in front of a run (no memory reads,
# so hoisting past stores is safe); casts qualify when their operand does.
_HOISTABLE = frozenset({"quir.constant", "builtin.int_const",
                        "builtin.float_const", "qcs.parameter_load"})
# Side-effect sinks with no results; they may move behind a run.
_SINKABLE = frozenset({"oq3.variable_assign", "oq3.cbit_assign_bit",
                       "builtin.memory_store"})


def _quantum_uses_after(ops: list[Operation], start: int, values) -> bool:
    for op in ops[start:]:
        if dialects.is_quantum(op.name) and any(v in values for v in op.operands):
            return True
    return False


def find_quantum_runs(ops: list[Operation]) -> list[dict]:
    """Partition a block into maximal quantum runs.

    A run is a span of quantum ops optionally bridged by pure classical
    ops: value producers get hoisted before the run (and flow in as
    circuit arguments), result-free consumers and casts whose results no
    later quantum op needs get sunk behind the run's call. Runs holding
    only timing ops (delay/barrier) are dropped: the shot-loop delay is
    not circuit content.

    Returns [{"start": i, "end": j, "hoist": [...], "sink": [...]}] where
    hoist/sink are op indices inside [start, end).
    """
    runs = []
    i = 0
    n = len(ops)
    while i < n:
        if not dialects.is_quantum(ops[i].name):
            i += 1
            continue
        start = i
        hoist: list[int] = []
        sink: list[int] = []
        hoisted_values: set = set()
        j = i
        last_quantum = i
        while j < n:
            op = ops[j]
            if dialects.is_quantum(op.name):
                last_quantum = j
                j += 1
                continue
            # Classical interlude: bridge it only if every op classifies
            # and another quantum op follows.
            k = j
            pending_hoist: list[int] = []
            pending_sink: list[int] = []
            pending_values: set = set()
            ok = True
            while k < n and not dialects.is_quantum(ops[k].name):
                c = ops[k]
                sig = dialects.lookup(c.name)
                if sig is None or c.regions or \
                        sig.primary_trait is not dialects.Trait.CLASSICAL:
                    ok = False
                    break
                if c.name in _HOISTABLE or (
                        c.name == "oq3.cast" and all(
                            v in hoisted_values or v in pending_values or
                            not _defined_in(ops, start, k, v)
                            for v in c.operands)):
                    pending_hoist.append(k)
                    pending_values.update(c.results)
                elif c.name in _SINKABLE or (
                        c.name == "oq3.cast" and
                        not _quantum_uses_after(ops, k + 1, set(c.results))):
                    pending_sink.append(k)
                else:
                    ok = False
                    break
                k += 1
            if not ok or k >= n or not dialects.is_quantum(ops[k].name):
                break
            hoist.extend(pending_hoist)
            sink.extend(pending_sink)
            hoisted_values.update(pending_values)
            j = k
        end = last_quantum + 1
        span = ops[start:end]
        if any(dialects.is_quantum(o.name) and o.name not in TIMING_ONLY_OPS
               for o in span):
            runs.append({"start": start, "end": end,
                         "hoist": [x for x in hoist if x < end],
                         "sink": [x for x in sink if x < end]})
        i = max(end, j if j > start else end)
    return runs


def _defined_in(ops: list[Operation], start: int, upto: int, value) -> bool:
    for op in ops[start:upto]:
        if value in op.results:
            return True
    return False


class _Extractor:
    def __init__(self, module: IrModule):
        self.module = module
        self.counter = 0
        self.new_circuits: list[Operation] = []

    def process_block(self, block: Block) -> None:
        runs = find_quantum_runs(block.ops)
        for run in runs:  # names follow encounter order within the block
            run["name"] = f"circuit_{self.counter}"
            self.counter += 1
        for run in reversed(runs):  # outline back-to-front to keep indices
            self.outline(block, run)
        for op in block.ops:
            for region in op.regions:
                for inner in region.blocks:
                    self.process_block(inner)

    def outline(self, block: Block, run: dict) -> None:
        start, end = run["start"], run["end"]
        moved = set(run["hoist"]) | set(run["sink"])
        hoisted = [block.ops[i] for i in run["hoist"]]
        sunk = [block.ops[i] for i in run["sink"]]
        body_ops = [block.ops[i] for i in range(start, end) if i not in moved]

        defined = set()
        for op in body_ops:
            defined.update(op.results)
        inputs = []
        seen = set()
        for op in body_ops:
            for v in op.operands:
                if v not in defined and v not in seen:
                    seen.add(v)
                    inputs.append(v)

        # Body results used by sunk ops or anything after the run become
        # circuit outputs (defs in this block are invisible to ancestors,
        # so this covers every possible use site).
        later_uses: dict = {}
        _collect_uses(sunk, later_uses)
        _collect_uses(block.ops[end:], later_uses)
        outputs = []
        for op in body_ops:
            for v in op.results:
                if later_uses.get(v, 0) > 0:
                    outputs.append(v)

        args = [self.module.new_value(v.type) for v in inputs]
        replace_uses(dict(zip(inputs, args)), body_ops)
        body = Block(args, body_ops)
        body.ops.append(Operation("quir.return", list(outputs)))

        name = run["name"]
        self.new_circuits.append(Operation(
            "quir.circuit", attrs={"sym_name": SymbolAttr(name)},
            regions=[Region([body])]))

        call = Operation("quir.call_circuit", inputs,
                         [self.module.new_value(v.type) for v in outputs],
                         attrs={"callee": SymbolAttr(name)})
        block.ops[start:end] = hoisted + [call] + sunk
        # Outputs can only be used after the run. A module-wide sweep is
        # cheap and cannot touch the outlined body (not attached yet).
        replace_uses(dict(zip(outputs, call.results)), self.module.block.ops)


def run_extract_circuits(module: IrModule, ctx: PassContext) -> list:
    extractor = _Extractor(module)
    extractor.process_block(module.block)
    extractor.new_circuits.sort(
        key=lambda op: int(op.symbol_name.rsplit("_", 1)[1]))
    module.block.ops.extend(extractor.new_circuits)
    return []


extract_circuits = Pass("extract-circuits", run_extract_circuits)
