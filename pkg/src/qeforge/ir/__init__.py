"""SSA IR core: containers, types, printer, parser, verifier."""

from qeforge.ir.core import (
    Block, IrModule, Operation, Region, Value, clone_op, replace_uses,
    walk_blocks,
)
from qeforge.ir.parser import parse_module
from qeforge.ir.printer import print_module, struct_equal
from qeforge.ir.verifier import quantum_ops_outside_circuits, verify
from qeforge.ir import types

__all__ = [
    "Block", "IrModule", "Operation", "Region", "Value", "clone_op",
    "replace_uses", "walk_blocks", "parse_module", "print_module",
    "struct_equal", "verify", "quantum_ops_outside_circuits", "types",
]
