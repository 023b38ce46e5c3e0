"""System-level (phase 1) transformation pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from qeforge.diagnostics import Category, Diagnostic, error, has_errors
from qeforge.ir.core import IrModule
from qeforge.ir.verifier import verify


@dataclass
class PassContext:
    """State shared by the phase-1 passes."""
    calibrations: Optional[object] = None  # CalibrationSet
    target: Optional[object] = None        # TargetNode tree root
    dt: float = 1e-9
    param_overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Pass:
    name: str
    run: Callable[[IrModule, PassContext], list]


def run_pipeline(module: IrModule, passes, ctx: PassContext) -> list:
    """Run passes in order, verifying after each.

    Stops at the first pass that emits an error diagnostic. A verify
    failure after a pass that reported success is a compiler bug and is
    surfaced as InternalError.
    """
    diags: list[Diagnostic] = []
    for p in passes:
        step = p.run(module, ctx)
        diags.extend(step)
        if has_errors(step):
            return diags
        broken = verify(module)
        if broken:
            diags.append(error(
                Category.INTERNAL_ERROR,
                f"IR fails verification after pass {p.name!r}: "
                f"{broken[0].message}", None, p.name))
            diags.extend(broken)
            return diags
    return diags
