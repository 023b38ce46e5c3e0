"""Variable lowering: oq3 variable ops become global memory plus integer
read-modify-write sequences.

cbit<w> variables are stored as iw globals. Indexed bit writes expand to
load / zext / shl / and-mask / or / store; identity casts left over from
the retyping are folded away.
"""

from __future__ import annotations

from qeforge.diagnostics import Category, Diagnostic, error
from qeforge.ir.core import Block, IrModule, Operation, Value
from qeforge.ir import types as T
from qeforge.ir.types import SymbolAttr, TypeKind
from qeforge.passes import Pass, PassContext


class _Lowerer:
    def __init__(self, module: IrModule):
        self.module = module
        self.diags: list[Diagnostic] = []
        self.widths: dict[str, int] = {}
        self.subst: dict[Value, Value] = {}

    def err(self, message: str) -> None:
        self.diags.append(error(Category.UNKNOWN_SYMBOL, message, None,
                                "lower-variables"))

    def run(self) -> list[Diagnostic]:
        for op in self.module.block.ops:
            if op.name == "oq3.declare_variable":
                ty = op.attr("type")
                sym = op.symbol_name
                width = ty.width if ty.kind is TypeKind.CBIT else (ty.width or 64)
                self.widths[sym] = width
                op.name = "builtin.global_memory"
                op.attrs = {"symbol": SymbolAttr(sym),
                            "type": T.int_(width), "initial": 0}
        self.lower_block(self.module.block)
        return self.diags

    def lower_block(self, block: Block) -> None:
        out: list[Operation] = []
        for op in block.ops:
            for i, v in enumerate(op.operands):
                if v in self.subst:
                    op.operands[i] = self.subst[v]
            replacement = self.lower_op(op, out)
            if replacement is None:
                out.append(op)
            else:
                out.extend(replacement)
            for region in op.regions:
                for inner in region.blocks:
                    self.lower_block(inner)
        block.ops = out

    def lower_op(self, op: Operation, out: list[Operation]):
        """Return the ops replacing `op`, or None to keep it unchanged."""
        name = op.name
        if name == "oq3.variable_load":
            width = self.lookup_width(op.symbol_name)
            if width is None:
                return []
            load = self.module.make_op(
                "builtin.memory_load", result_types=[T.int_(width)],
                attrs={"symbol": SymbolAttr(op.symbol_name)})
            self.subst[op.results[0]] = load.results[0]
            return [load]
        if name == "oq3.variable_assign":
            if self.lookup_width(op.symbol_name) is None:
                return []
            return [Operation("builtin.memory_store", [op.operands[0]],
                              attrs={"symbol": SymbolAttr(op.symbol_name)})]
        if name == "oq3.cbit_assign_bit":
            return self.lower_bit_assign(op)
        if name == "oq3.cbit_extract_bit":
            return self.lower_bit_extract(op)
        if name == "oq3.cast":
            src = op.operands[0].type
            dst = op.results[0].type
            if dst.kind is TypeKind.CBIT or src.kind is TypeKind.CBIT or \
                    src == dst:
                # Retyping made this cast an identity; forward the operand.
                self.subst[op.results[0]] = op.operands[0]
                return []
            return None
        if op.operands or op.results:
            return None
        return None

    def lookup_width(self, sym):
        width = self.widths.get(sym)
        if width is None:
            self.err(f"variable @{sym} is not declared")
        return width

    def lower_bit_assign(self, op: Operation) -> list[Operation]:
        sym = op.symbol_name
        width = self.lookup_width(sym)
        if width is None:
            return []
        index = op.attr("index")
        bit = op.operands[0]
        symbol = SymbolAttr(sym)
        if width == 1:
            return [Operation("builtin.memory_store", [bit],
                              attrs={"symbol": symbol})]
        mk = self.module.make_op
        old = mk("builtin.memory_load", result_types=[T.int_(width)],
                 attrs={"symbol": symbol})
        ext = mk("builtin.zext", [bit], result_types=[T.int_(width)])
        shifted = mk("builtin.shl", [ext.results[0]],
                     result_types=[T.int_(width)], attrs={"amount": index})
        mask = mk("builtin.int_const", result_types=[T.int_(width)],
                  attrs={"value": ((1 << width) - 1) & ~(1 << index)})
        cleared = mk("builtin.and", [old.results[0], mask.results[0]],
                     result_types=[T.int_(width)])
        merged = mk("builtin.or", [cleared.results[0], shifted.results[0]],
                    result_types=[T.int_(width)])
        store = Operation("builtin.memory_store", [merged.results[0]],
                          attrs={"symbol": symbol})
        return [old, ext, shifted, mask, cleared, merged, store]

    def lower_bit_extract(self, op: Operation) -> list[Operation]:
        index = op.attr("index")
        source = op.operands[0]
        width = source.type.width or 1
        if width == 1:
            self.subst[op.results[0]] = source
            return []
        mk = self.module.make_op
        shifted = mk("builtin.lshr", [source], result_types=[T.int_(width)],
                     attrs={"amount": index})
        bit = mk("builtin.trunc", [shifted.results[0]], result_types=[T.i1()])
        self.subst[op.results[0]] = bit.results[0]
        return [shifted, bit]


def run_lower_variables(module: IrModule, ctx: PassContext) -> list:
    return _Lowerer(module).run()


lower_variables = Pass("lower-variables", run_lower_variables)
