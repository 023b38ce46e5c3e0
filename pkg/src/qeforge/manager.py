"""Two-phase compilation driver.

Phase 1 runs the system-level pipeline on the single program module;
localization then yields one independent module per instrument, and phase
2 applies each instrument's pipeline on a worker pool (at most
`jobs` concurrent workers). Every instrument writes distinct payload
entries and the payload serializer orders by name, so the output bytes
are independent of worker count and completion order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from qeforge import diagnostics as diag
from qeforge.diagnostics import Category, Diagnostic, error, has_errors
from qeforge.frontend import ast, parse
from qeforge.ir.printer import print_module
from qeforge.ir.verifier import verify
from qeforge.irgen import GenOptions, generate_ir
from qeforge.emitter import run_instrument_pipeline
from qeforge.passes import PassContext, run_pipeline
from qeforge.passes.circuits import extract_circuits
from qeforge.passes.localize import localize
from qeforge.passes.pulse import lower_to_pulse
from qeforge.passes.resets import parallelize_resets
from qeforge.passes.schedule import schedule
from qeforge.passes.variables import lower_variables
from qeforge.payload import Payload

EMIT_STAGES = ("ast", "ir-initial", "ir-scheduled", "payload")

PHASE1 = [extract_circuits, lower_variables, parallelize_resets,
          lower_to_pulse, schedule]


@dataclass
class CompileOptions:
    jobs: int = 0                  # 0 = one worker per instrument (capped)
    emit: str = "payload"
    num_shots: int = 1000
    parameter_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        assert self.emit in EMIT_STAGES
        assert self.jobs >= 0


@dataclass
class CompileResult:
    payload: Optional[bytes] = None
    text: Optional[str] = None
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not has_errors(self.diagnostics)


def _reset_tree(node) -> None:
    node.diagnostics = diag.DiagnosticSink()
    if hasattr(node, "emit_result"):
        del node.emit_result
    for child in node.children:
        _reset_tree(child)


def compile_source(source: str, target_root, cals,
                   opts: Optional[CompileOptions] = None) -> CompileResult:
    """Compile OpenQASM text against a loaded target; stops at opts.emit.

    The target tree's per-node diagnostics are cleared first, so a loaded
    target can be reused across compiles.
    """
    opts = opts or CompileOptions()
    result = CompileResult()
    if target_root is not None:
        _reset_tree(target_root)

    program, parse_diags = parse(source)
    result.diagnostics.extend(parse_diags)
    if has_errors(parse_diags):
        return result
    if opts.emit == "ast":
        result.text = ast.dump(program) + "\n"
        return result

    module, gen_diags = generate_ir(program, GenOptions(opts.num_shots))
    result.diagnostics.extend(gen_diags)
    if has_errors(gen_diags):
        return result
    broken = verify(module)
    if broken:
        result.diagnostics.append(error(
            Category.INTERNAL_ERROR, "generated IR fails verification",
            None, "ir-gen"))
        result.diagnostics.extend(broken)
        return result
    if opts.emit == "ir-initial":
        result.text = print_module(module)
        return result

    if target_root is None or cals is None:
        result.diagnostics.append(error(
            Category.CONFIG_ERROR,
            "a target (config + calibrations) is required beyond ir-initial",
            None, "compile"))
        return result

    ctx = PassContext(calibrations=cals, target=target_root, dt=cals.dt,
                      param_overrides=dict(opts.parameter_overrides))
    phase1_diags = run_pipeline(module, PHASE1, ctx)
    result.diagnostics.extend(phase1_diags)
    if has_errors(phase1_diags):
        return result
    if opts.emit == "ir-scheduled":
        result.text = print_module(module)
        return result

    declared_params = _declared_parameters(module, opts.parameter_overrides)
    modules, loc_diags = localize(module, ctx)
    result.diagnostics.extend(loc_diags)
    if has_errors(loc_diags):
        return result
    for uid, inst_module in modules.items():
        broken = verify(inst_module)
        if broken:
            result.diagnostics.append(error(
                Category.INTERNAL_ERROR,
                f"localized module for {uid} fails verification", None,
                "localize"))
            result.diagnostics.extend(broken)
            return result

    payload = Payload(target_name=target_root.name)
    instruments = target_root.instruments()
    jobs = opts.jobs or min(len(instruments), os.cpu_count() or 1)

    def run_one(node):
        return run_instrument_pipeline(node, modules[node.uid], payload,
                                       cals.dt, opts.parameter_overrides)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [pool.submit(run_one, node) for node in instruments]
        for future in futures:
            future.result()

    collected = diag.collect(target_root, [])
    result.diagnostics.extend(collected)
    if has_errors(collected):
        return result

    _assemble_manifest(payload, instruments, declared_params)
    result.payload = payload.serialize()
    return result


def _declared_parameters(module, overrides: dict) -> dict:
    params: dict[str, dict] = {}
    for op in module.block.ops:
        if op.name == "qcs.declare_parameter":
            default = op.attr("default")
            value = float(getattr(default, "value", default))
            symbol = op.symbol_name
            params[symbol] = {
                "type": "angle",
                "default": float(overrides.get(symbol, value)),
                "patches": [],
            }
    return params


def _assemble_manifest(payload: Payload, instruments, declared: dict) -> None:
    entries = payload.entries()
    params = dict(declared)
    for node in instruments:
        files = sorted(n for n in entries if n.startswith(f"{node.uid}."))
        payload.instruments.append({
            "uid": node.uid,
            "role": node.instrument_role,
            "files": files,
        })
        result = getattr(node, "emit_result", None)
        if result is None:
            continue
        for site in result.patches:
            spec = params.get(site.symbol)
            if spec is not None:
                spec["patches"].append([f"{node.uid}.bin", site.line,
                                        site.arg])
    for spec in params.values():
        spec["patches"].sort()
    payload.parameters = params
