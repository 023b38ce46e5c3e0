"""Localization: split the scheduled module into one independent module
per instrument.

Drive/acquire instruments keep, per sequence, only the ops on their own
ports; removed ops are replaced by per-frame delays so the timing grid is
unchanged, and every projected invocation spans the full sequence
duration. Captures live only on acquire instruments; the hub receives
every consumed measurement bit (qcs.recv from the acquire instrument),
keeps all classical computation and control flow, and broadcasts the bits
that control flow consumes; drive/acquire modules receive those via
qcs.recv from the hub and condition their own scf.if copies on them.
Barriers are dropped here: scheduling already fixed every start time.
"""

from __future__ import annotations

from dataclasses import dataclass

from qeforge.diagnostics import Category, Diagnostic, error
from qeforge.ir.core import Block, IrModule, Operation, Region, Value, clone_op
from qeforge.ir import types as T
from qeforge.ir.types import DurationAttr, SymbolAttr
from qeforge.passes import Pass, PassContext
from qeforge.passes.schedule import timed_duration, waveform_lengths

_TIMED = ("pulse.play", "pulse.capture", "pulse.delay")
_FENCES = ("pulse.shift_phase", "pulse.set_phase",
           "pulse.shift_frequency", "pulse.set_frequency")
_PURE_DEFS = ("oq3.cast", "qcs.parameter_load", "quir.constant",
              "builtin.int_const", "builtin.float_const", "pulse.port",
              "pulse.frame", "pulse.mix_frame")


class _LocalizeError(Exception):
    pass


@dataclass
class _SeqInfo:
    op: Operation
    uids: list                       # frames-attr order
    arg_uid: dict                    # mf arg Value -> uid
    capture_bits: list               # bit attr per return position
    capture_owner: list              # acquire uid per return position


class _Localizer:
    def __init__(self, module: IrModule, ctx: PassContext):
        self.module = module
        self.ctx = ctx
        self.cals = ctx.calibrations
        self.diags: list[Diagnostic] = []
        self.sequences: dict[str, _SeqInfo] = {}
        self.main: Operation = None
        self.use_counts: dict[Value, int] = {}
        self.bcast_ids: dict[int, int] = {}      # id(scf.if op) -> bcast id
        self.hub_uid: str = ""

    def err(self, message: str,
            category: Category = Category.CONFIG_ERROR) -> _LocalizeError:
        self.diags.append(error(category, message, None, "localize"))
        return _LocalizeError()

    def owner_of_uid(self, uid: str) -> str:
        info = self.cals.mixed_frames.get(uid)
        if info is None:
            raise self.err(f"unknown mixed frame {uid!r}")
        owner = self.cals.port_owner.get(info.port_uid)
        if owner is None:
            raise self.err(f"port {info.port_uid!r} is not mapped to any "
                           f"instrument")
        return owner

    # -- shared analysis -----------------------------------------------------

    def analyze(self, instruments) -> None:
        self.main = self.module.find_symbol("main")
        if self.main is None:
            raise self.err("module has no @main function",
                           Category.UNKNOWN_SYMBOL)
        self.hub_uid = next(i.uid for i in instruments
                            if i.instrument_role == "hub")
        for op in self.module.block.ops:
            if op.name != "pulse.sequence":
                continue
            uids = [u for u in (op.attr("frames") or "").split(",") if u]
            body = op.body()
            arg_uid = dict(zip(body.args, uids))
            bits, owners = [], []
            ret = body.ops[-1]
            capture_of = {o.results[0]: o for o in body.ops
                          if o.name == "pulse.capture"}
            for v in (ret.operands if ret.name == "pulse.return" else []):
                cap = capture_of.get(v)
                if cap is None:
                    raise self.err(f"@{op.symbol_name} returns a non-capture "
                                   f"value", Category.TYPE_MISMATCH)
                bits.append(cap.attr("bit", 0))
                owners.append(self.owner_of_uid(
                    arg_uid.get(cap.operands[0], "")))
            self.sequences[op.symbol_name] = _SeqInfo(
                op, uids, arg_uid, bits, owners)
        self.count_uses(self.main.body().ops)
        counter = [0]
        self.assign_broadcasts(self.main.body().ops,
                               [i for i in instruments
                                if i.instrument_role != "hub"], counter)

    def count_uses(self, ops) -> None:
        for op in ops:
            for v in op.operands:
                self.use_counts[v] = self.use_counts.get(v, 0) + 1
            for region in op.regions:
                for block in region.blocks:
                    self.count_uses(block.ops)

    def seq_has_content(self, name: str, inst) -> bool:
        info = self.sequences.get(name)
        if info is None:
            return False
        for op in info.op.body().ops:
            uid = self.op_frame_uid(op, info)
            if uid is not None and self.owner_of_uid(uid) == inst.uid:
                return True
        return False

    @staticmethod
    def op_frame_uid(op: Operation, info: _SeqInfo):
        if op.name in _TIMED or op.name in _FENCES:
            mf = op.operands[1] if op.name == "pulse.delay" else op.operands[0]
            return info.arg_uid.get(mf)
        return None

    def region_retained(self, ops, inst) -> bool:
        for op in ops:
            if op.name == "pulse.call_sequence":
                if self.seq_has_content(op.attr("callee").name, inst):
                    return True
            elif op.name == "pulse.delay":
                uid = self.main_mf_uid(op.operands[1])
                if uid and self.owner_of_uid(uid) == inst.uid:
                    return True
            for region in op.regions:
                for block in region.blocks:
                    if self.region_retained(block.ops, inst):
                        return True
        return False

    def main_mf_uid(self, value: Value):
        op = self.main_defs.get(value)
        if op is not None and op.name == "pulse.mix_frame":
            return op.attr("uid")
        return None

    def assign_broadcasts(self, ops, non_hub, counter) -> None:
        for op in ops:
            if op.name == "scf.if":
                if any(self.region_retained(r.blocks[0].ops, inst)
                       for r in op.regions for inst in non_hub):
                    self.bcast_ids[id(op)] = counter[0]
                    counter[0] += 1
            for region in op.regions:
                for block in region.blocks:
                    self.assign_broadcasts(block.ops, non_hub, counter)

    # -- entry -----------------------------------------------------------------

    def run(self, instruments) -> dict:
        self.main_defs = {}
        main = self.module.find_symbol("main")
        if main is not None:
            for op in main.walk():
                for res in op.results:
                    self.main_defs[res] = op
        self.analyze(instruments)
        out = {}
        for inst in instruments:
            out[inst.uid] = _InstrumentBuilder(self, inst).build()
        return out


class _InstrumentBuilder:
    def __init__(self, loc: _Localizer, inst):
        self.loc = loc
        self.inst = inst
        self.is_hub = inst.instrument_role == "hub"
        self.dest = IrModule()
        self.value_map: dict[Value, Value] = {}
        self.needed: set = set()
        self.kept_uids: list = []
        self.projections: dict[str, tuple] = {}
        self.used_params: set = set()

    # -- projection of sequences --------------------------------------------------

    def project_sequence(self, name: str):
        """(sequence op in dest, kept return positions) or (None, [])."""
        if name in self.projections:
            return self.projections[name]
        info = self.loc.sequences.get(name)
        if info is None:
            raise self.loc.err(f"call to unknown sequence @{name}",
                               Category.UNKNOWN_SYMBOL)
        result = self._project(info)
        self.projections[name] = result
        return result

    def _project(self, info: _SeqInfo):
        body = info.op.body()
        mine = [u for u in info.uids
                if self.loc.owner_of_uid(u) == self.inst.uid]
        if not mine:
            return None, []
        lengths = waveform_lengths(body)
        constants = {op.results[0]: op for op in body.ops
                     if op.name == "quir.constant"}
        dt = self.loc.ctx.dt

        kept: list[tuple[int, Operation, str]] = []
        for idx, op in enumerate(body.ops):
            uid = self.loc.op_frame_uid(op, info)
            if uid in mine:
                kept.append((idx, op, uid))
        if not kept:
            return None, []

        duration = info.op.attr("duration", 0)
        per_uid: dict[str, list] = {u: [] for u in mine}
        for idx, op, uid in kept:
            per_uid[uid].append((idx, op))

        # Gap-filling delays preserve the global timing grid per frame.
        merged: list[tuple[int, int, object]] = []  # (start, idx, op|gap)
        for order, uid in enumerate(mine):
            t = 0
            for idx, op in per_uid[uid]:
                start = op.attr("start_time", 0)
                if start > t:
                    merged.append((t, idx, ("gap", uid, start - t)))
                length = timed_duration(op, lengths, constants, dt) or 0
                merged.append((start, idx, op))
                t = max(t, start + length)
            if t < duration:
                gap_idx = len(body.ops) + order
                merged.append((t, gap_idx, ("gap", uid, duration - t)))
        merged.sort(key=lambda item: (item[0], item[1]))

        new_body = Block()
        mf_args = {}
        for uid in mine:
            arg = self.dest.new_value(T.mixed_frame())
            mf_args[uid] = arg
        f64_args = {}
        for arg in body.args:
            if arg.type.kind.value == "mixed_frame":
                if info.arg_uid.get(arg) in mine:
                    self.value_map[arg] = mf_args[info.arg_uid[arg]]
            elif any(arg in op.operands for _, op, _ in kept):
                new_arg = self.dest.new_value(arg.type)
                f64_args[arg] = new_arg
                self.value_map[arg] = new_arg

        gap_consts: dict[int, Value] = {}

        def gap_const(samples: int) -> Value:
            if samples not in gap_consts:
                const = self.dest.make_op(
                    "quir.constant", result_types=[T.duration("dt")],
                    attrs={"value": DurationAttr(float(samples), "dt")})
                new_body.ops.append(const)
                gap_consts[samples] = const.results[0]
            return gap_consts[samples]

        def ensure_def(value: Value) -> Value:
            if value in self.value_map:
                return self.value_map[value]
            defining = None
            for op in body.ops:
                if value in op.results:
                    defining = op
                    break
            if defining is None:
                raise self.loc.err("sequence op uses an unmapped value",
                                   Category.INTERNAL_ERROR)
            for operand in defining.operands:
                ensure_def(operand)
            clone = clone_op(defining, self.value_map, self.dest)
            new_body.ops.append(clone)
            return self.value_map[value]

        kept_captures: dict[Value, Value] = {}
        for start, idx, item in merged:
            if isinstance(item, tuple):
                _, uid, samples = item
                delay = Operation(
                    "pulse.delay", [gap_const(samples), mf_args[uid]],
                    attrs={"start_time": start})
                new_body.ops.append(delay)
                continue
            for operand in item.operands:
                ensure_def(operand)
            clone = clone_op(item, self.value_map, self.dest)
            new_body.ops.append(clone)
            if item.name == "pulse.capture":
                kept_captures[item.results[0]] = clone.results[0]

        ret = body.ops[-1]
        kept_positions = []
        returned = []
        for pos, v in enumerate(ret.operands):
            if v in kept_captures:
                kept_positions.append(pos)
                returned.append(kept_captures[v])
        new_body.ops.append(Operation("pulse.return", returned))
        new_body.args = [mf_args[u] for u in mine] + \
            [f64_args[a] for a in body.args if a in f64_args]

        seq = Operation("pulse.sequence",
                        attrs={"sym_name": SymbolAttr(info.op.symbol_name),
                               "frames": ",".join(mine),
                               "duration": duration},
                        regions=[Region([new_body])])
        for uid in mine:
            if uid not in self.kept_uids:
                self.kept_uids.append(uid)
        self.kept_f64_sources = getattr(self, "kept_f64_sources", {})
        self.kept_f64_sources[info.op.symbol_name] = \
            [i for i, a in enumerate(body.args) if a in f64_args]
        return seq, kept_positions

    # -- needed-value slice ----------------------------------------------------

    def compute_needed(self) -> None:
        """Mark main-level values this instrument keeps, walking backwards
        so chains of pure defs are retained transitively."""
        ordered: list[Operation] = []

        def flatten(ops):
            for op in ops:
                ordered.append(op)
                for region in op.regions:
                    for block in region.blocks:
                        flatten(block.ops)

        flatten(self.loc.main.body().ops)

        def root(op: Operation) -> bool:
            name = op.name
            if name in ("scf.for", "func.return"):
                return True
            if name == "quir.delay" and len(op.operands) == 1:
                return True
            if name == "pulse.call_sequence":
                seq, _ = self.project_sequence(op.attr("callee").name)
                return seq is not None
            if name == "pulse.delay":
                uid = self.loc.main_mf_uid(op.operands[1])
                return bool(uid) and \
                    self.loc.owner_of_uid(uid) == self.inst.uid
            return False

        roots = [op for op in ordered if root(op)]
        for op in roots:
            if op.name == "pulse.call_sequence":
                # Operand order mirrors block-arg order: mixed frames first,
                # then f64 parameters; kept_f64 holds original arg indices.
                name = op.attr("callee").name
                info = self.loc.sequences[name]
                n_mf = len(info.uids)
                kept_f64 = set(self.kept_f64_sources.get(name, []))
                for i, operand in enumerate(op.operands):
                    if i < n_mf:
                        if self.loc.owner_of_uid(info.uids[i]) == self.inst.uid:
                            self.needed.add(operand)
                    elif i in kept_f64:
                        self.needed.add(operand)
            else:
                self.needed.update(op.operands)
        for op in reversed(ordered):
            if op.name in _PURE_DEFS and \
                    any(r in self.needed for r in op.results):
                self.needed.update(op.operands)

    # -- main emission ------------------------------------------------------------

    def build(self) -> IrModule:
        main = self.loc.main
        self.kept_f64_sources = {}
        # Project every called sequence first so kept uids/args are known.
        for op in main.walk():
            if op.name == "pulse.call_sequence":
                self.project_sequence(op.attr("callee").name)
        self.compute_needed()

        body = Block()
        self.emit_ops(main.body().ops, body.ops)
        new_main = Operation("func.func",
                             attrs={"sym_name": SymbolAttr("main")},
                             regions=[Region([body])])

        header: list[Operation] = []
        for op in self.loc.module.block.ops:
            if op.name == "qcs.declare_parameter":
                if self.is_hub or op.symbol_name in self.used_params:
                    header.append(clone_op(op, self.value_map, self.dest))
            elif op.name == "builtin.global_memory" and self.is_hub:
                header.append(clone_op(op, self.value_map, self.dest))
        self.dest.block.ops = header + [new_main]
        for name, (seq, _) in sorted(self.projections.items()):
            if seq is not None:
                self.dest.block.ops.append(seq)
        return self.dest

    def emit_ops(self, src_ops, dest_ops) -> None:
        for op in src_ops:
            self.emit_op(op, dest_ops)

    def emit_op(self, op: Operation, out: list) -> None:
        name = op.name
        loc = self.loc
        if name == "scf.for":
            body = op.body()
            new_block = Block([self.dest.new_value(a.type)
                               for a in body.args])
            for old, new in zip(body.args, new_block.args):
                self.value_map[old] = new
            clone_operands = [self.mapped(v) for v in op.operands]
            self.emit_ops(body.ops, new_block.ops)
            out.append(Operation("scf.for", clone_operands,
                                 attrs=dict(op.attrs),
                                 regions=[Region([new_block])]))
            return
        if name == "scf.if":
            self.emit_if(op, out)
            return
        if name == "qcs.parallel_control_flow":
            self.emit_pcf(op, out)
            return
        if name == "pulse.call_sequence":
            self.emit_call(op, out)
            return
        if name in ("qcs.init", "qcs.finalize", "qcs.shot_init"):
            out.append(Operation(name, attrs=dict(op.attrs)))
            return
        if name == "quir.delay" and len(op.operands) == 1:
            out.append(Operation(name, [self.mapped(op.operands[0])],
                                 attrs=dict(op.attrs)))
            return
        if name == "func.return":
            out.append(Operation(name, [self.mapped(v) for v in op.operands]))
            return
        if name in ("pulse.barrier", "quir.declare_qubit", "quir.barrier",
                    "quir.delay"):
            return  # resolved by scheduling / no longer meaningful
        if name == "pulse.delay":
            uid = loc.main_mf_uid(op.operands[1])
            if uid and loc.owner_of_uid(uid) == self.inst.uid:
                out.append(Operation(name,
                                     [self.mapped(v) for v in op.operands],
                                     attrs=dict(op.attrs)))
            return
        if name in ("pulse.port", "pulse.frame", "pulse.mix_frame"):
            if any(r in self.needed for r in op.results):
                out.append(clone_op(op, self.value_map, self.dest))
            return
        # Classical ops: the hub keeps them all, instruments keep the
        # needed-slice (parameter/constant chains feeding their pulses).
        if self.is_hub or any(r in self.needed for r in op.results):
            if name == "qcs.parameter_load":
                self.used_params.add(op.symbol_name)
            clone = clone_op(op, self.value_map, self.dest, strict=False)
            clone.operands = [self.mapped(v) for v in op.operands]
            out.append(clone)

    def mapped(self, value: Value) -> Value:
        new = self.value_map.get(value)
        if new is None:
            # Value whose producer was dropped for this instrument; callers
            # only request mapped values for ops that are actually kept.
            raise self.loc.err(
                f"{self.inst.uid}: internal localization error (unmapped "
                f"value)", Category.INTERNAL_ERROR)
        return new

    def emit_call(self, op: Operation, out: list) -> None:
        name = op.attr("callee").name
        seq, kept_positions = self.projections[name]
        info = self.loc.sequences[name]
        if self.is_hub:
            # The hub receives every measurement bit anything consumes.
            for pos, result in enumerate(op.results):
                if self.loc.use_counts.get(result, 0) == 0:
                    continue
                recv = self.dest.make_op(
                    "qcs.recv", result_types=[T.i1()],
                    attrs={"from": info.capture_owner[pos],
                           "bit": info.capture_bits[pos]})
                self.value_map[result] = recv.results[0]
                out.append(recv)
            return
        if seq is None:
            return
        n_mf = len(info.uids)
        kept_f64 = set(self.kept_f64_sources.get(name, []))
        operands = []
        for i, operand in enumerate(op.operands):
            if i < n_mf:
                if self.loc.owner_of_uid(info.uids[i]) == self.inst.uid:
                    operands.append(self.mapped(operand))
            elif i in kept_f64:  # absolute arg indices, same space as operands
                operands.append(self.mapped(operand))
        call = Operation("pulse.call_sequence", operands,
                         [self.dest.new_value(T.i1())
                          for _ in kept_positions],
                         attrs={"callee": SymbolAttr(name)})
        out.append(call)
        for pos, result in zip(kept_positions, call.results):
            self.value_map[op.results[pos]] = result

    def emit_if(self, op: Operation, out: list) -> None:
        loc = self.loc
        bcast = loc.bcast_ids.get(id(op))
        if self.is_hub:
            cond = self.mapped(op.operands[0])
            if bcast is not None:
                out.append(Operation("qcs.broadcast", [cond],
                                     attrs={"bit": bcast}))
            branches = []
            for region in op.regions:
                block = Block()
                self.emit_ops(region.blocks[0].ops, block.ops)
                branches.append(Region([block]))
            out.append(Operation("scf.if", [cond], regions=branches))
            return
        if not any(loc.region_retained(r.blocks[0].ops, self.inst)
                   for r in op.regions):
            return
        recv = self.dest.make_op("qcs.recv", result_types=[T.i1()],
                                 attrs={"from": loc.hub_uid,
                                        "bit": bcast if bcast is not None
                                        else 0})
        out.append(recv)
        branches = []
        for region in op.regions:
            block = Block()
            self.emit_ops(region.blocks[0].ops, block.ops)
            branches.append(Region([block]))
        out.append(Operation("scf.if", [recv.results[0]], regions=branches))

    def emit_pcf(self, op: Operation, out: list) -> None:
        members = op.body().ops
        if self.is_hub:
            pre: list = []
            inner: list = []
            for member in members:
                if member.name == "scf.if":
                    cond = self.mapped(member.operands[0])
                    bcast = self.loc.bcast_ids.get(id(member))
                    if bcast is not None:
                        pre.append(Operation("qcs.broadcast", [cond],
                                             attrs={"bit": bcast}))
                    branches = []
                    for region in member.regions:
                        block = Block()
                        self.emit_ops(region.blocks[0].ops, block.ops)
                        branches.append(Region([block]))
                    inner.append(Operation("scf.if", [cond],
                                           regions=branches))
                else:
                    self.emit_op(member, inner)
            out.extend(pre)
            out.append(Operation("qcs.parallel_control_flow",
                                 regions=[Region([Block(ops=inner)])]))
            return
        pre = []
        inner = []
        for member in members:
            if member.name != "scf.if":
                self.emit_op(member, inner)
                continue
            if not any(self.loc.region_retained(r.blocks[0].ops, self.inst)
                       for r in member.regions):
                continue
            bcast = self.loc.bcast_ids.get(id(member))
            recv = self.dest.make_op("qcs.recv", result_types=[T.i1()],
                                     attrs={"from": self.loc.hub_uid,
                                            "bit": bcast if bcast is not None
                                            else 0})
            pre.append(recv)
            branches = []
            for region in member.regions:
                block = Block()
                self.emit_ops(region.blocks[0].ops, block.ops)
                branches.append(Region([block]))
            inner.append(Operation("scf.if", [recv.results[0]],
                                   regions=branches))
        out.extend(pre)
        if inner:
            out.append(Operation("qcs.parallel_control_flow",
                                 regions=[Region([Block(ops=inner)])]))


def localize(module: IrModule, ctx: PassContext) -> tuple[dict, list]:
    """Returns ({instrument uid -> module}, diagnostics); modules appear in
    tree pre-order. On error the dict is empty."""
    localizer = _Localizer(module, ctx)
    instruments = ctx.target.instruments()
    try:
        out = localizer.run(instruments)
    except _LocalizeError:
        return {}, localizer.diags
    return out, localizer.diags
