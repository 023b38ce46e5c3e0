"""Canonical textual form for IR modules.

One syntax for every op: `%r = dialect.op(%a) {key = val} : (T) -> (T)`
followed by brace-delimited regions. Value numbering is dense and
assigned in definition order, so printing the same structure always
yields the same text.
"""

from __future__ import annotations

from qeforge.ir.core import Block, IrModule, Operation, Value
from qeforge.ir.types import UnitAttr, format_attr


class _Printer:
    def __init__(self):
        self.lines: list[str] = []
        self.numbers: dict[Value, int] = {}
        self.next_id = 0

    def number(self, value: Value) -> int:
        n = self.numbers.get(value)
        if n is None:
            n = self.next_id
            self.numbers[value] = n
            self.next_id += 1
        return n

    def ref(self, value: Value) -> str:
        n = self.numbers.get(value)
        if n is None:
            # Use of a value the walk has not defined (broken module);
            # print a stable placeholder so debugging output still works.
            return f"%?{value.id}"
        return f"%{n}"

    def print_block(self, block: Block, indent: int) -> None:
        pad = "  " * indent
        if block.args:
            args = ", ".join(
                f"%{self.number(a)}: {a.type}" for a in block.args)
            self.lines.append(f"{pad}^({args}):")
        for op in block.ops:
            self.print_op(op, indent)

    def print_op(self, op: Operation, indent: int) -> None:
        pad = "  " * indent
        parts = [pad]
        if op.results:
            parts.append(", ".join(f"%{self.number(r)}" for r in op.results))
            parts.append(" = ")
        parts.append(op.name)
        parts.append("(")
        parts.append(", ".join(self.ref(v) for v in op.operands))
        parts.append(")")
        if op.attrs:
            attr_parts = []
            for key in sorted(op.attrs):
                value = op.attrs[key]
                if isinstance(value, UnitAttr):
                    attr_parts.append(key)
                else:
                    attr_parts.append(f"{key} = {format_attr(value)}")
            parts.append(" {" + ", ".join(attr_parts) + "}")
        in_types = ", ".join(str(v.type) for v in op.operands)
        out_types = ", ".join(str(r.type) for r in op.results)
        parts.append(f" : ({in_types}) -> ({out_types})")
        if not op.regions:
            self.lines.append("".join(parts))
            return
        parts.append(" {")
        self.lines.append("".join(parts))
        for i, region in enumerate(op.regions):
            if i > 0:
                self.lines.append(f"{pad}}} {{")
            for block in region.blocks:
                self.print_block(block, indent + 1)
        self.lines.append(f"{pad}}}")


def print_module(module: IrModule) -> str:
    printer = _Printer()
    printer.lines.append("module {")
    printer.print_block(module.block, 1)
    printer.lines.append("}")
    return "\n".join(printer.lines) + "\n"


def struct_equal(a: IrModule, b: IrModule) -> bool:
    """Structural equality up to value renumbering."""
    return print_module(a) == print_module(b)
