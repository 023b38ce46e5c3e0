"""Structural verifier for IR modules.

verify() returns an empty list iff SSA discipline holds, every op matches
its registered signature, symbol references resolve, and the dialect
structural rules (circuit/sequence/parallel-region contents) hold. It
never mutates the module.
"""

from __future__ import annotations

from typing import Optional

from qeforge import dialects
from qeforge.diagnostics import Category, Diagnostic, error
from qeforge.dialects import Trait
from qeforge.ir.core import Block, IrModule, Operation, Value
from qeforge.ir.types import AngleAttr, DurationAttr, TypeKind

# Ops allowed at module top level besides symbol definitions (calibration
# modules carry their port/frame/mixed-frame definitions there).
_MODULE_LEVEL_DEFS = {"pulse.port", "pulse.frame", "pulse.mix_frame"}

# Non-quantum ops a circuit body may contain (reset expansion interleaves
# measure feedback; constants feed literal gate angles).
_CIRCUIT_EXTRA = {"quir.constant", "qcs.parallel_control_flow", "scf.if",
                  "quir.return"}

_SEQUENCE_EXTRA = {"quir.constant", "builtin.float_const", "pulse.return"}

_TERMINATOR_OF = {
    "func.func": "func.return",
    "quir.circuit": "quir.return",
    "pulse.sequence": "pulse.return",
}


class _Verifier:
    def __init__(self, module: IrModule):
        self.module = module
        self.diags: list[Diagnostic] = []
        self.symbols = module.symbol_table()
        self.defined: set[int] = set()
        # Scope stack of (value-id set, isolated flag).
        self.scopes: list[tuple[set, bool]] = []

    def err(self, message: str,
            category: Category = Category.TYPE_MISMATCH) -> None:
        self.diags.append(error(category, message, None, "verify"))

    # -- scope helpers -------------------------------------------------------

    def define(self, value: Value, where: str) -> None:
        if value.id in self.defined:
            self.err(f"{where}: value defined more than once (SSA violation)")
            return
        self.defined.add(value.id)
        self.scopes[-1][0].add(value.id)

    def in_scope(self, value: Value) -> bool:
        for ids, isolated in reversed(self.scopes):
            if value.id in ids:
                return True
            if isolated:
                return False
        return False

    # -- entry ---------------------------------------------------------------

    def run(self) -> list[Diagnostic]:
        seen: dict[str, str] = {}
        for op in self.module.block.ops:
            name = op.symbol_name
            if name is not None:
                if name in seen:
                    self.err(f"duplicate symbol @{name}",
                             Category.UNKNOWN_SYMBOL)
                seen[name] = op.name
        self.scopes.append((set(), True))
        for op in self.module.block.ops:
            sig = dialects.lookup(op.name)
            if sig is None:
                self.err(f"unknown operation {op.name!r}",
                         Category.UNKNOWN_SYMBOL)
                continue
            if not (sig.has(Trait.SYMBOL_DEF) or op.name in _MODULE_LEVEL_DEFS):
                self.err(f"{op.name} is not allowed at module level")
            self.check_op(op, sig, container=None)
        self.scopes.pop()
        return self.diags

    # -- per-op checks ---------------------------------------------------------

    def check_op(self, op: Operation, sig: dialects.OpSignature,
                 container: Optional[str]) -> None:
        self.check_signature(op, sig)
        self.check_attrs(op, sig)
        self.check_symbol_uses(op, sig)
        self.check_special(op)
        self.check_regions(op, sig, container)

    def check_signature(self, op: Operation, sig: dialects.OpSignature) -> None:
        fixed = len(sig.operands)
        if sig.variadic is None:
            if len(op.operands) != fixed:
                self.err(f"{op.name}: expected {fixed} operands, "
                         f"got {len(op.operands)}")
                return
        elif len(op.operands) < fixed:
            self.err(f"{op.name}: expected at least {fixed} operands, "
                     f"got {len(op.operands)}")
            return
        for i, operand in enumerate(op.operands):
            if not self.in_scope(operand):
                self.err(f"{op.name}: operand {i} used before definition",
                         Category.UNKNOWN_SYMBOL)
            constraint = sig.operands[i] if i < fixed else sig.variadic
            if not dialects.check_constraint(constraint, operand.type):
                self.err(f"{op.name}: operand {i} has type {operand.type}, "
                         f"expected {constraint}")
        if not sig.variadic_results:
            if len(op.results) != len(sig.results):
                self.err(f"{op.name}: expected {len(sig.results)} results, "
                         f"got {len(op.results)}")
            else:
                for i, (res, constraint) in enumerate(zip(op.results,
                                                          sig.results)):
                    if not dialects.check_constraint(constraint, res.type):
                        self.err(f"{op.name}: result {i} has type {res.type}, "
                                 f"expected {constraint}")
        for res in op.results:
            self.define(res, op.name)

    def check_attrs(self, op: Operation, sig: dialects.OpSignature) -> None:
        required = dict(sig.attrs)
        optional = dict(sig.opt_attrs)
        for key, kind in required.items():
            if key not in op.attrs:
                self.err(f"{op.name}: missing required attribute {key!r}")
            elif not kind.matches(op.attrs[key]):
                self.err(f"{op.name}: attribute {key!r} has the wrong kind "
                         f"(expected {kind.value})")
        for key, value in op.attrs.items():
            if key in required:
                continue
            kind = optional.get(key) or dialects.GLOBAL_OPT_ATTRS.get(key)
            if kind is None:
                self.err(f"{op.name}: unknown attribute {key!r}")
            elif not kind.matches(value):
                self.err(f"{op.name}: attribute {key!r} has the wrong kind "
                         f"(expected {kind.value})")

    def check_symbol_uses(self, op: Operation,
                          sig: dialects.OpSignature) -> None:
        if not sig.has(Trait.SYMBOL_USE):
            return
        ref = op.attr("callee") or op.attr("symbol")
        if ref is None or not hasattr(ref, "name"):
            return  # attribute errors already reported
        target = self.symbols.get(ref.name)
        if target is None:
            self.err(f"{op.name}: reference to unknown symbol @{ref.name}",
                     Category.UNKNOWN_SYMBOL)
            return
        if op.name in ("func.call", "quir.call_gate"):
            self.check_call(op, target, "func.func", "func.return")
        elif op.name == "quir.call_circuit":
            self.check_call(op, target, "quir.circuit", "quir.return")
        elif op.name == "pulse.call_sequence":
            self.check_call(op, target, "pulse.sequence", "pulse.return")
        elif op.name in ("oq3.variable_assign", "oq3.variable_load",
                         "oq3.cbit_assign_bit"):
            self.check_variable_use(op, target)
        elif op.name == "qcs.parameter_load":
            if target.name != "qcs.declare_parameter":
                self.err(f"{op.name}: @{ref.name} is not a parameter",
                         Category.UNKNOWN_SYMBOL)
            elif op.results and op.results[0].type != target.attr("type"):
                self.err(f"{op.name}: result type {op.results[0].type} does "
                         f"not match parameter @{ref.name}")
        elif op.name in ("builtin.memory_store", "builtin.memory_load"):
            if target.name != "builtin.global_memory":
                self.err(f"{op.name}: @{ref.name} is not global memory",
                         Category.UNKNOWN_SYMBOL)
            else:
                declared = target.attr("type")
                value = (op.operands[0].type if op.operands
                         else op.results[0].type if op.results else None)
                if value is not None and value != declared:
                    self.err(f"{op.name}: type {value} does not match "
                             f"@{ref.name} ({declared})")

    def check_call(self, op: Operation, target: Operation,
                   want_kind: str, terminator: str) -> None:
        if target.name != want_kind:
            self.err(f"{op.name}: callee @{target.symbol_name} is a "
                     f"{target.name}, expected {want_kind}",
                     Category.UNKNOWN_SYMBOL)
            return
        body = target.body()
        params = [a.type for a in body.args]
        args = [o.type for o in op.operands]
        if params != args:
            self.err(f"{op.name} @{target.symbol_name}: argument types "
                     f"({', '.join(map(str, args))}) do not match parameters "
                     f"({', '.join(map(str, params))})")
        if body.ops and body.ops[-1].name == terminator:
            returned = [v.type for v in body.ops[-1].operands]
        else:
            returned = []
        got = [r.type for r in op.results]
        if returned != got:
            self.err(f"{op.name} @{target.symbol_name}: result types do not "
                     f"match the callee terminator")

    def check_variable_use(self, op: Operation, target: Operation) -> None:
        if target.name != "oq3.declare_variable":
            self.err(f"{op.name}: @{target.symbol_name} is not a variable",
                     Category.UNKNOWN_SYMBOL)
            return
        declared = target.attr("type")
        if op.name == "oq3.variable_assign":
            if op.operands and op.operands[0].type != declared:
                self.err(f"variable_assign @{target.symbol_name}: value type "
                         f"{op.operands[0].type} does not match {declared}")
        elif op.name == "oq3.variable_load":
            if op.results and op.results[0].type != declared:
                self.err(f"variable_load @{target.symbol_name}: result type "
                         f"{op.results[0].type} does not match {declared}")
        else:  # cbit_assign_bit
            index = op.attr("index")
            if declared.kind is not TypeKind.CBIT:
                self.err(f"cbit_assign_bit @{target.symbol_name}: variable is "
                         f"not a cbit")
            elif isinstance(index, int) and not 0 <= index < declared.width:
                self.err(f"cbit_assign_bit @{target.symbol_name}: index "
                         f"{index} out of range for width {declared.width}")

    def check_special(self, op: Operation) -> None:
        name = op.name
        if name == "oq3.cast":
            src, dst = op.operands[0].type, op.results[0].type
            if not dialects.cast_allowed(src, dst):
                self.err(f"cast from {src} to {dst} is not allowed")
        elif name == "quir.constant":
            value = op.attr("value")
            result = op.results[0].type if op.results else None
            if isinstance(value, AngleAttr):
                if result is None or result.kind is not TypeKind.ANGLE:
                    self.err("quir.constant: angle value needs an angle result")
            elif isinstance(value, DurationAttr):
                if result is None or result.kind is not TypeKind.DURATION or \
                        result.unit != value.unit:
                    self.err("quir.constant: duration value/result mismatch")
        elif name == "oq3.cbit_extract_bit":
            index = op.attr("index")
            width = op.operands[0].type.width
            if isinstance(index, int) and not 0 <= index < (width or 0):
                self.err(f"cbit_extract_bit: index {index} out of range")
        elif name in ("builtin.and", "builtin.or", "builtin.xor"):
            widths = {op.operands[0].type.width, op.operands[1].type.width,
                      op.results[0].type.width}
            if len(widths) != 1:
                self.err(f"{name}: operand/result widths differ")
        elif name in ("builtin.shl", "builtin.lshr"):
            width = op.operands[0].type.width
            if op.results[0].type.width != width:
                self.err(f"{name}: result width must match operand")
            amount = op.attr("amount")
            if isinstance(amount, int) and not 0 <= amount < (width or 1):
                self.err(f"{name}: shift amount {amount} out of range")
        elif name == "builtin.zext":
            if op.results[0].type.width <= op.operands[0].type.width:
                self.err("zext: result must be wider than operand")
        elif name == "builtin.trunc":
            if op.results[0].type.width >= op.operands[0].type.width:
                self.err("trunc: result must be narrower than operand")
        elif name == "builtin.int_const":
            value = op.attr("value")
            width = op.results[0].type.width if op.results else None
            if isinstance(value, int) and width and not \
                    -(1 << (width - 1)) <= value < (1 << width):
                self.err(f"int_const: value {value} does not fit in i{width}")
        elif name == "qcs.shot_init":
            shots = op.attr("num_shots")
            if isinstance(shots, int) and shots < 1:
                self.err("shot_init: num_shots must be at least 1")

    # -- regions ---------------------------------------------------------------

    def check_regions(self, op: Operation, sig: dialects.OpSignature,
                      container: Optional[str]) -> None:
        if len(op.regions) != sig.regions:
            self.err(f"{op.name}: expected {sig.regions} regions, "
                     f"got {len(op.regions)}")
            return
        for region in op.regions:
            if len(region.blocks) != 1:
                self.err(f"{op.name}: regions must hold exactly one block")
                continue
            block = region.blocks[0]
            self.check_block_args(op, sig, block)
            direct, tail = self.container_kind(op, container)
            self.scopes.append((set(), sig.has(Trait.ISOLATED)))
            for arg in block.args:
                self.define(arg, f"{op.name} block argument")
            for child in block.ops:
                child_sig = dialects.lookup(child.name)
                if child_sig is None:
                    self.err(f"unknown operation {child.name!r}",
                             Category.UNKNOWN_SYMBOL)
                    continue
                self.check_containment(child, child_sig, direct)
                self.check_op(child, child_sig, tail)
            self.check_terminator(op, block)
            self.scopes.pop()

    def check_block_args(self, op: Operation, sig: dialects.OpSignature,
                         block: Block) -> None:
        policy = sig.region_args
        if policy is None:
            if block.args:
                self.err(f"{op.name}: region takes no block arguments")
        elif policy != "any":
            if len(block.args) != len(policy):
                self.err(f"{op.name}: expected {len(policy)} block arguments")
            else:
                for arg, constraint in zip(block.args, policy):
                    if not dialects.check_constraint(constraint, arg.type):
                        self.err(f"{op.name}: block argument type {arg.type} "
                                 f"does not satisfy {constraint}")

    def container_kind(self, op: Operation,
                       outer: Optional[str]) -> tuple[str, str]:
        """(rule for direct children, rule scf children inherit).

        parallel_control_flow restricts only its immediate children to
        control-flow ops; an scf.if inside it obeys the enclosing
        function-like container's content rule.
        """
        if op.name in ("quir.circuit", "pulse.sequence", "func.func"):
            return op.name, op.name
        tail = outer or "func.func"
        if op.name == "qcs.parallel_control_flow":
            return "qcs.parallel_control_flow", tail
        return tail, tail

    def check_containment(self, op: Operation, sig: dialects.OpSignature,
                          container: str) -> None:
        if container == "quir.circuit":
            if not sig.has(Trait.QUANTUM) and op.name not in _CIRCUIT_EXTRA:
                self.err(f"{op.name} is not allowed inside a circuit body")
        elif container == "pulse.sequence":
            if op.dialect != "pulse" and op.name not in _SEQUENCE_EXTRA:
                self.err(f"{op.name} is not allowed inside a sequence body")
            elif op.name in ("pulse.sequence",):
                self.err("sequences cannot nest")
        elif container == "qcs.parallel_control_flow":
            if not sig.has(Trait.CONTROL_FLOW) or sig.has(Trait.TERMINATOR):
                self.err(f"{op.name} is not allowed inside "
                         f"parallel_control_flow (only control flow is)")

    def check_terminator(self, op: Operation, block: Block) -> None:
        want = _TERMINATOR_OF.get(op.name)
        if want is None:
            # Non-function-like regions must not contain stray terminators.
            for child in block.ops:
                sig = dialects.lookup(child.name)
                if sig is not None and sig.has(Trait.TERMINATOR):
                    self.err(f"{child.name} is only allowed as the final op "
                             f"of its function-like body")
            return
        if not block.ops or block.ops[-1].name != want:
            self.err(f"{op.name} @{op.symbol_name}: body must end with {want}")
            return
        for child in block.ops[:-1]:
            sig = dialects.lookup(child.name)
            if sig is not None and sig.has(Trait.TERMINATOR):
                self.err(f"{op.name} @{op.symbol_name}: {child.name} before "
                         f"the end of the body")


def verify(module: IrModule) -> list[Diagnostic]:
    return _Verifier(module).run()


# Timing glue that may legally remain outside circuits (the per-shot delay
# of the loop head is the canonical case); it carries no gate semantics.
TIMING_ONLY_OPS = frozenset({"quir.delay", "quir.barrier"})


def quantum_ops_outside_circuits(module: IrModule) -> list[Operation]:
    """Canonical-form predicate support: quantum-trait ops not inside any
    quir.circuit body (pure timing ops exempt). Empty after extraction."""
    offenders: list[Operation] = []

    def visit(ops, inside_circuit: bool):
        for op in ops:
            if not inside_circuit and dialects.is_quantum(op.name) \
                    and op.name not in TIMING_ONLY_OPS:
                offenders.append(op)
            nested_inside = inside_circuit or op.name == "quir.circuit"
            for region in op.regions:
                for block in region.blocks:
                    visit(block.ops, nested_inside)

    visit(module.block.ops, False)
    return offenders
