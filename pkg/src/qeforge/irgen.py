"""AST to IR generation.

Produces the high-level module shape: variable/parameter declarations and
gate functions at module scope, then func @main holding qcs.init, the
shot loop (per-shot delay + qcs.shot_init first), the program body, and
qcs.finalize. Qubits are declared inside the shot loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from qeforge.diagnostics import Category, Diagnostic, error
from qeforge.frontend import ast
from qeforge.ir.core import Block, IrModule, Operation, Region, Value
from qeforge.ir import types as T
from qeforge.ir.types import AngleAttr, DurationAttr, SymbolAttr, UNIT


@dataclass
class GenOptions:
    num_shots: int = 1000
    shot_delay_value: float = 1.0
    shot_delay_unit: str = "ms"

    def __post_init__(self):
        assert self.num_shots >= 1


class _GenError(Exception):
    pass


@dataclass
class _GateInfo:
    params: tuple[str, ...]
    qubits: tuple[str, ...]


class _Generator:
    def __init__(self, program: ast.Program, opts: GenOptions):
        self.program = program
        self.opts = opts
        self.module = IrModule()
        self.diags: list[Diagnostic] = []
        self.variables: dict[str, T.IrType] = {}
        self.parameters: dict[str, T.IrType] = {}
        self.gates: dict[str, _GateInfo] = {}
        self.qubit_ids: list[int] = []

    def err(self, message: str, span=None,
            category: Category = Category.UNKNOWN_SYMBOL) -> _GenError:
        self.diags.append(error(category, message, span, "ir-gen"))
        return _GenError()

    # -- module scope -------------------------------------------------------

    def run(self) -> IrModule:
        for stmt in self.program.statements:
            try:
                self.declare(stmt)
            except _GenError:
                continue
        for stmt in self.program.statements:
            if isinstance(stmt, ast.GateDecl):
                try:
                    self.emit_gate_function(stmt)
                except _GenError:
                    continue
        try:
            self.emit_main()
        except _GenError:
            pass
        return self.module

    def declare(self, stmt) -> None:
        if isinstance(stmt, (ast.BitDecl, ast.OutputDecl)):
            if isinstance(stmt, ast.BitDecl):
                name, width, output = stmt.name, stmt.width, False
            else:
                name, width = stmt.name, stmt.type.width or 1
                output = True
            if name in self.variables or name in self.parameters:
                raise self.err(f"duplicate declaration of {name!r}", stmt.span)
            ty = T.cbit(width)
            self.variables[name] = ty
            attrs = {"symbol": SymbolAttr(name), "type": ty}
            if output:
                attrs["output"] = UNIT
            self.module.add(Operation("oq3.declare_variable", attrs=attrs))
        elif isinstance(stmt, ast.InputDecl):
            if stmt.name in self.parameters or stmt.name in self.variables:
                raise self.err(f"duplicate declaration of {stmt.name!r}",
                               stmt.span)
            ty = T.angle(stmt.type.width or 64)
            self.parameters[stmt.name] = ty
            self.module.add(Operation("qcs.declare_parameter", attrs={
                "symbol": SymbolAttr(stmt.name),
                "type": ty,
                "default": AngleAttr(0.0),
            }))
        elif isinstance(stmt, ast.GateDecl):
            if stmt.name in self.gates or stmt.name in ("U", "CX"):
                raise self.err(f"duplicate gate {stmt.name!r}", stmt.span)
            self.gates[stmt.name] = _GateInfo(stmt.params, stmt.qubits)
        elif isinstance(stmt, ast.QubitDecl):
            if stmt.physical_id in self.qubit_ids:
                raise self.err(f"duplicate declaration of ${stmt.physical_id}",
                               stmt.span)
            self.qubit_ids.append(stmt.physical_id)

    # -- gate functions -------------------------------------------------------

    def emit_gate_function(self, decl: ast.GateDecl) -> None:
        angle_env: dict[str, Value] = {}
        qubit_env: dict[str, Value] = {}
        args: list[Value] = []
        for p in decl.params:
            v = self.module.new_value(T.angle(64))
            angle_env[p] = v
            args.append(v)
        for q in decl.qubits:
            v = self.module.new_value(T.qubit())
            qubit_env[q] = v
            args.append(v)
        body = Block(args)
        ctx = _BodyContext(self, body, qubit_env, angle_env, in_gate=True)
        for stmt in decl.body:
            try:
                ctx.emit(stmt)
            except _GenError:
                continue
        body.ops.append(Operation("func.return"))
        self.module.add(Operation(
            "func.func", attrs={"sym_name": SymbolAttr(decl.name)},
            regions=[Region([body])]))

    # -- main -----------------------------------------------------------------

    def emit_main(self) -> None:
        main = Block()

        def push(op: Operation) -> Operation:
            main.ops.append(op)
            return op

        delay_const = push(self.module.make_op(
            "quir.constant", result_types=[T.duration(self.opts.shot_delay_unit)],
            attrs={"value": DurationAttr(self.opts.shot_delay_value,
                                         self.opts.shot_delay_unit)}))
        lb = push(self.module.make_op(
            "builtin.int_const", result_types=[T.i32()], attrs={"value": 0}))
        ub = push(self.module.make_op(
            "builtin.int_const", result_types=[T.i32()],
            attrs={"value": self.opts.num_shots}))
        step = push(self.module.make_op(
            "builtin.int_const", result_types=[T.i32()], attrs={"value": 1}))
        push(Operation("qcs.init"))

        loop_body = Block([self.module.new_value(T.i32())])
        loop_body.ops.append(Operation("quir.delay",
                                       [delay_const.results[0]]))
        loop_body.ops.append(Operation(
            "qcs.shot_init", attrs={"num_shots": self.opts.num_shots}))

        qubit_env: dict[int, Value] = {}
        for qid in self.qubit_ids:
            op = self.module.make_op("quir.declare_qubit",
                                     result_types=[T.qubit()],
                                     attrs={"id": qid})
            loop_body.ops.append(op)
            qubit_env[qid] = op.results[0]

        ctx = _BodyContext(self, loop_body, qubit_env, {}, in_gate=False)
        for stmt in self.program.statements:
            if isinstance(stmt, (ast.BitDecl, ast.InputDecl, ast.OutputDecl,
                                 ast.GateDecl, ast.QubitDecl)):
                continue
            try:
                ctx.emit(stmt)
            except _GenError:
                continue

        push(Operation("scf.for",
                       [lb.results[0], ub.results[0], step.results[0]],
                       attrs={"qcs.shot_loop": UNIT},
                       regions=[Region([loop_body])]))
        push(Operation("qcs.finalize"))
        push(Operation("func.return", [lb.results[0]]))
        self.module.add(Operation(
            "func.func", attrs={"sym_name": SymbolAttr("main")},
            regions=[Region([main])]))


class _BodyContext:
    """Emits statements into one block (main loop body, gate body, or an
    if-branch), sharing the generator's symbol environments."""

    def __init__(self, gen: _Generator, block: Block, qubit_env, angle_env,
                 in_gate: bool):
        self.gen = gen
        self.module = gen.module
        self.block = block
        self.qubit_env = qubit_env    # int id -> Value | formal name -> Value
        self.angle_env = angle_env    # gate-body formal name -> Value
        self.in_gate = in_gate

    def push(self, op: Operation) -> Operation:
        self.block.ops.append(op)
        return op

    # -- value helpers --------------------------------------------------------

    def qubit_value(self, ref: ast.QubitRef) -> Value:
        if ref.is_hardware:
            value = self.qubit_env.get(ref.physical_id)
            if value is None:
                raise self.gen.err(f"qubit ${ref.physical_id} is not declared",
                                   ref.span)
            return value
        value = self.qubit_env.get(ref.name)
        if value is None:
            raise self.gen.err(f"unknown qubit argument {ref.name!r}", ref.span)
        return value

    def angle_value(self, expr: ast.AngleExpr) -> Value:
        if isinstance(expr, (ast.FloatLit, ast.IntLit)):
            op = self.module.make_op(
                "quir.constant", result_types=[T.angle(64)],
                attrs={"value": AngleAttr(float(expr.value) % math.tau)})
            return self.push(op).results[0]
        if expr.name in self.angle_env:
            return self.angle_env[expr.name]
        declared = self.gen.parameters.get(expr.name)
        if declared is None:
            raise self.gen.err(f"unknown angle parameter {expr.name!r}",
                               expr.span)
        op = self.module.make_op(
            "qcs.parameter_load", result_types=[declared],
            attrs={"symbol": SymbolAttr(expr.name)})
        result = self.push(op).results[0]
        if declared != T.angle(64):
            cast = self.module.make_op("oq3.cast", [result],
                                       result_types=[T.angle(64)])
            result = self.push(cast).results[0]
        return result

    def measure_value(self, expr: ast.MeasureExpr) -> Value:
        op = self.module.make_op("quir.measure",
                                 [self.qubit_value(expr.qubit)],
                                 result_types=[T.i1()])
        return self.push(op).results[0]

    def all_qubits(self) -> list[Value]:
        return [self.qubit_env[k] for k in
                (self.gen.qubit_ids if not self.in_gate
                 else list(self.qubit_env))]

    # -- statements -------------------------------------------------------------

    def emit(self, stmt) -> None:
        if isinstance(stmt, ast.Reset):
            self.push(Operation("quir.reset", [self.qubit_value(stmt.qubit)]))
        elif isinstance(stmt, ast.BuiltinU):
            angles = [self.angle_value(a)
                      for a in (stmt.theta, stmt.phi, stmt.lam)]
            self.push(Operation("quir.builtin_U",
                                [self.qubit_value(stmt.qubit), *angles]))
        elif isinstance(stmt, ast.BuiltinCX):
            self.push(Operation("quir.builtin_CX",
                                [self.qubit_value(stmt.control),
                                 self.qubit_value(stmt.target)]))
        elif isinstance(stmt, ast.GateCall):
            self.emit_gate_call(stmt)
        elif isinstance(stmt, ast.Barrier):
            qubits = ([self.qubit_value(q) for q in stmt.qubits]
                      if stmt.qubits else self.all_qubits())
            self.push(Operation("quir.barrier", qubits))
        elif isinstance(stmt, ast.Delay):
            const = self.push(self.module.make_op(
                "quir.constant",
                result_types=[T.duration(stmt.duration.unit)],
                attrs={"value": DurationAttr(stmt.duration.value,
                                             stmt.duration.unit)}))
            qubits = ([self.qubit_value(q) for q in stmt.qubits]
                      if stmt.qubits else self.all_qubits())
            self.push(Operation("quir.delay", [const.results[0], *qubits]))
        elif isinstance(stmt, ast.Measure):
            self.measure_value(ast.MeasureExpr(stmt.qubit, stmt.span))
        elif isinstance(stmt, ast.Assign):
            self.emit_assign(stmt)
        elif isinstance(stmt, ast.IndexedAssign):
            self.emit_indexed_assign(stmt)
        elif isinstance(stmt, ast.If):
            self.emit_if(stmt)
        else:
            raise self.gen.err(
                f"cannot generate IR for {type(stmt).__name__}", stmt.span,
                Category.UNSUPPORTED_INPUT)

    def emit_gate_call(self, stmt: ast.GateCall) -> None:
        info = self.gen.gates.get(stmt.name)
        if info is None:
            raise self.gen.err(f"unknown gate {stmt.name!r}", stmt.span)
        if len(stmt.angle_args) != len(info.params) or \
                len(stmt.qubit_args) != len(info.qubits):
            raise self.gen.err(
                f"gate {stmt.name!r} takes {len(info.params)} angles and "
                f"{len(info.qubits)} qubits", stmt.span, Category.TYPE_MISMATCH)
        operands = [self.angle_value(a) for a in stmt.angle_args]
        operands += [self.qubit_value(q) for q in stmt.qubit_args]
        self.push(Operation("quir.call_gate", operands,
                            attrs={"callee": SymbolAttr(stmt.name)}))

    def emit_assign(self, stmt: ast.Assign) -> None:
        declared = self.gen.variables.get(stmt.lvalue)
        if declared is None:
            raise self.gen.err(f"assignment to undeclared bit {stmt.lvalue!r}",
                               stmt.span)
        if declared.width != 1:
            raise self.gen.err(
                f"cannot measure into bit[{declared.width}] {stmt.lvalue!r} "
                f"without an index", stmt.span, Category.TYPE_MISMATCH)
        measured = self.measure_value(stmt.rvalue)
        cast = self.push(self.module.make_op("oq3.cast", [measured],
                                             result_types=[declared]))
        self.push(Operation("oq3.variable_assign", [cast.results[0]],
                            attrs={"symbol": SymbolAttr(stmt.lvalue)}))

    def emit_indexed_assign(self, stmt: ast.IndexedAssign) -> None:
        declared = self.gen.variables.get(stmt.name)
        if declared is None:
            raise self.gen.err(f"assignment to undeclared bit {stmt.name!r}",
                               stmt.span)
        if not 0 <= stmt.index < declared.width:
            raise self.gen.err(
                f"index {stmt.index} out of range for bit[{declared.width}] "
                f"{stmt.name!r}", stmt.span, Category.TYPE_MISMATCH)
        measured = self.measure_value(stmt.rvalue)
        self.push(Operation(
            "oq3.cbit_assign_bit", [measured],
            attrs={"symbol": SymbolAttr(stmt.name), "index": stmt.index}))

    def emit_if(self, stmt: ast.If) -> None:
        declared = self.gen.variables.get(stmt.cond.name)
        if declared is None:
            raise self.gen.err(f"condition on undeclared bit "
                               f"{stmt.cond.name!r}", stmt.cond.span)
        load = self.push(self.module.make_op(
            "oq3.variable_load", result_types=[declared],
            attrs={"symbol": SymbolAttr(stmt.cond.name)}))
        if stmt.cond.index is not None:
            if not 0 <= stmt.cond.index < declared.width:
                raise self.gen.err(
                    f"index {stmt.cond.index} out of range for "
                    f"{stmt.cond.name!r}", stmt.cond.span,
                    Category.TYPE_MISMATCH)
            cond = self.push(self.module.make_op(
                "oq3.cbit_extract_bit", [load.results[0]],
                result_types=[T.i1()], attrs={"index": stmt.cond.index}))
        elif declared.width == 1:
            cond = self.push(self.module.make_op(
                "oq3.cast", [load.results[0]], result_types=[T.i1()]))
        else:
            raise self.gen.err(
                f"condition on bit[{declared.width}] {stmt.cond.name!r} "
                f"needs an index", stmt.cond.span, Category.TYPE_MISMATCH)

        then_block = Block()
        else_block = Block()
        for block, stmts in ((then_block, stmt.then_block),
                             (else_block, stmt.else_block)):
            ctx = _BodyContext(self.gen, block, self.qubit_env,
                               self.angle_env, self.in_gate)
            for inner in stmts:
                try:
                    ctx.emit(inner)
                except _GenError:
                    continue
        self.push(Operation("scf.if", [cond.results[0]],
                            regions=[Region([then_block]),
                                     Region([else_block])]))


def generate_ir(program: ast.Program,
                opts: GenOptions | None = None) -> tuple[IrModule, list[Diagnostic]]:
    """Generate the high-level IR module for a parsed program."""
    gen = _Generator(program, opts or GenOptions())
    module = gen.run()
    return module, gen.diags
