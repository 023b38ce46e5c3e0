"""ASAP scheduling of pulse sequences.

Every op in a sequence gets a start_time attribute (in dt samples): plays,
captures and delays occupy their mixed frame for their duration;
phase/frequency ops are zero-length fences on every mixed frame sharing
the op's frame; barriers fence the union of their operands' frames. The
sequence's duration attribute is the maximum end time.
"""

from __future__ import annotations

import math

from qeforge.diagnostics import Category, Diagnostic, error
from qeforge.ir.core import Block, IrModule, Operation, Value
from qeforge.passes import Pass, PassContext

_FENCE_OPS = ("pulse.shift_phase", "pulse.set_phase",
              "pulse.shift_frequency", "pulse.set_frequency")

_UNIT_SECONDS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}


def round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def duration_samples(value: float, unit: str, dt: float) -> int:
    if unit == "dt":
        return round_half_away(value)
    return round_half_away(value * _UNIT_SECONDS[unit] / dt)


def waveform_lengths(block: Block) -> dict:
    lengths: dict[Value, int] = {}
    for op in block.ops:
        if op.name == "pulse.create_waveform":
            lengths[op.results[0]] = len(op.attr("samples"))
    return lengths


def timed_duration(op: Operation, lengths: dict, constants: dict,
                   dt: float):
    """Occupation length in samples for a timed pulse op; None when a
    waveform or delay duration cannot be resolved in-body."""
    if op.name == "pulse.play":
        return lengths.get(op.operands[1])
    if op.name == "pulse.capture":
        return op.attr("duration", 0)
    if op.name == "pulse.delay":
        const = constants.get(op.operands[0])
        if const is None:
            return None
        return duration_samples(const.attr("value").value,
                                const.attr("value").unit, dt)
    return 0


class _Scheduler:
    def __init__(self, module: IrModule, ctx: PassContext):
        self.module = module
        self.ctx = ctx
        self.diags: list[Diagnostic] = []

    def err(self, message: str) -> None:
        self.diags.append(error(Category.SCHEDULE_ERROR, message, None,
                                "schedule"))

    def run(self) -> list[Diagnostic]:
        for op in self.module.block.ops:
            if op.name == "pulse.sequence":
                self.schedule_sequence(op)
        return self.diags

    def frame_groups(self, seq: Operation, mf_args: list[Value]) -> dict:
        """mixed-frame arg -> hashable frame key. Falls back to per-arg
        groups when the sequence or target carries no frame information."""
        uids = [u for u in (seq.attr("frames") or "").split(",") if u]
        cals = self.ctx.calibrations
        groups: dict[Value, object] = {}
        for i, arg in enumerate(mf_args):
            key: object = ("solo", i)
            if cals is not None and i < len(uids):
                info = cals.mixed_frames.get(uids[i])
                if info is not None:
                    key = ("frame", info.frame_uid)
            groups[arg] = key
        return groups

    def schedule_sequence(self, seq: Operation) -> None:
        body = seq.body()
        mf_args = [a for a in body.args
                   if a.type.kind.value == "mixed_frame"]
        groups = self.frame_groups(seq, mf_args)
        avail: dict[Value, int] = {a: 0 for a in mf_args}
        lengths = waveform_lengths(body)
        constants = {op.results[0]: op for op in body.ops
                     if op.name == "quir.constant"}
        name = seq.symbol_name

        def group_of(mf: Value):
            return [a for a in mf_args if groups.get(a) == groups.get(mf)]

        for op in body.ops:
            if op.name in ("pulse.create_waveform", "builtin.float_const",
                           "quir.constant", "pulse.return", "pulse.mix_frame",
                           "pulse.frame", "pulse.port"):
                continue
            if op.name in ("pulse.play", "pulse.capture", "pulse.delay"):
                mf = op.operands[1] if op.name == "pulse.delay" \
                    else op.operands[0]
                length = timed_duration(op, lengths, constants, self.ctx.dt)
                if length is None:
                    kind = ("waveform length" if op.name == "pulse.play"
                            else "delay duration")
                    self.err(f"@{name}: unknown {kind}")
                    return
                if length < 0:
                    self.err(f"@{name}: negative duration {length}")
                    return
                if mf not in avail:
                    avail[mf] = 0  # mixed frame defined in-body
                    groups[mf] = ("solo", len(groups))
                start = avail[mf]
                op.attrs["start_time"] = start
                avail[mf] = start + length
                continue
            if op.name in _FENCE_OPS:
                mf = op.operands[0]
                if mf not in avail:
                    avail[mf] = 0
                    groups[mf] = ("solo", len(groups))
                members = group_of(mf)
                start = max(avail[m] for m in members)
                op.attrs["start_time"] = start
                for m in members:
                    avail[m] = start
                continue
            if op.name == "pulse.barrier":
                members: list[Value] = []
                for mf in op.operands:
                    if mf not in avail:
                        avail[mf] = 0
                        groups[mf] = ("solo", len(groups))
                    for m in group_of(mf):
                        if m not in members:
                            members.append(m)
                start = max((avail[m] for m in members), default=0)
                op.attrs["start_time"] = start
                for m in members:
                    avail[m] = start
                continue
            self.err(f"@{name}: cannot schedule {op.name}")
            return
        seq.attrs["duration"] = max(avail.values(), default=0)


def run_schedule(module: IrModule, ctx: PassContext) -> list:
    return _Scheduler(module, ctx).run()


schedule = Pass("schedule", run_schedule)
