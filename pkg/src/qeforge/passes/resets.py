"""Reset parallelization: consecutive resets on distinct qubits become a
measurement per qubit followed by one qcs.parallel_control_flow region
holding a conditional X flip (builtin_U(pi, 0, pi)) per qubit.

A repeated qubit closes the current group: overlapping runs are never
merged into one parallel region.
"""

from __future__ import annotations

import math

from qeforge.ir.core import Block, IrModule, Operation, Region
from qeforge.ir import types as T
from qeforge.ir.types import AngleAttr
from qeforge.passes import Pass, PassContext


def reset_groups(ops: list[Operation]) -> list[tuple[int, int]]:
    """[start, end) runs of consecutive resets on pairwise-distinct qubits."""
    groups = []
    i = 0
    n = len(ops)
    while i < n:
        if ops[i].name != "quir.reset":
            i += 1
            continue
        qubits = {id(ops[i].operands[0])}
        j = i + 1
        while j < n and ops[j].name == "quir.reset" and \
                id(ops[j].operands[0]) not in qubits:
            qubits.add(id(ops[j].operands[0]))
            j += 1
        groups.append((i, j))
        i = j
    return groups


class _Expander:
    def __init__(self, module: IrModule):
        self.module = module

    def expand_group(self, ops: list[Operation]) -> list[Operation]:
        mk = self.module.make_op
        pi = mk("quir.constant", result_types=[T.angle(64)],
                attrs={"value": AngleAttr(math.pi)})
        zero = mk("quir.constant", result_types=[T.angle(64)],
                  attrs={"value": AngleAttr(0.0)})
        out = [pi, zero]
        branches = []
        for reset in ops:
            qubit = reset.operands[0]
            measure = mk("quir.measure", [qubit], result_types=[T.i1()])
            out.append(measure)
            flip = Operation("quir.builtin_U",
                             [qubit, pi.results[0], zero.results[0],
                              pi.results[0]])
            branches.append(Operation(
                "scf.if", [measure.results[0]],
                regions=[Region([Block(ops=[flip])]), Region([Block()])]))
        out.append(Operation("qcs.parallel_control_flow",
                             regions=[Region([Block(ops=branches)])]))
        return out

    def process_block(self, block: Block, in_circuit: bool) -> None:
        if in_circuit:
            for start, end in reversed(reset_groups(block.ops)):
                block.ops[start:end] = self.expand_group(block.ops[start:end])
        for op in block.ops:
            inside = in_circuit or op.name == "quir.circuit"
            for region in op.regions:
                for inner in region.blocks:
                    self.process_block(inner, inside)


def run_parallelize_resets(module: IrModule, ctx: PassContext) -> list:
    expander = _Expander(module)
    expander.process_block(module.block, in_circuit=False)
    return []


parallelize_resets = Pass("parallelize-resets", run_parallelize_resets)
