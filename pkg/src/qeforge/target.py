"""Hierarchical target model: system/instrument tree, target configuration
and calibration loading.

A target config is a line-oriented text file:

    # comment
    name mock3q
    dt 1e-09
    qubits 3
    calibration mock3q_cals.qeir
    instrument drive0 drive ports q0_drive, q1_drive
    instrument acquire0 acquire ports q0_readout, q1_readout
    instrument hub0 hub
    gate U 0 -> u_q0
    gate cx 0 1 -> cx_q0q1
    gate measure 0 -> measure_q0

The calibration file is a pulse-dialect module (.qeir) declaring ports,
frames and mixed frames at module level (each carrying a uid attribute)
plus one pulse.sequence per gate-map entry; a sequence names the mixed
frames it plays on in a comma-separated `frames` attribute, and its block
arguments are those mixed frames followed by any f64 parameters.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from qeforge.diagnostics import Category, Diagnostic, DiagnosticSink, error
from qeforge.ir.core import IrModule, Operation
from qeforge.ir.parser import parse_module
from qeforge.ir.types import TypeKind
from qeforge.ir.verifier import verify

DRIVE, ACQUIRE, HUB = "drive", "acquire", "hub"
ROLES = (DRIVE, ACQUIRE, HUB)

ROLE_PIPELINES = {
    DRIVE: ["pulse-to-mock-isa"],
    ACQUIRE: ["acquire-to-mock-isa"],
    HUB: ["classical-to-mock-isa"],
}


@dataclass
class TargetNode:
    kind: str                     # "System" | "Instrument"
    name: str
    uid: str
    children: list = field(default_factory=list)
    instrument_role: Optional[str] = None
    ports: list = field(default_factory=list)
    diagnostics: DiagnosticSink = field(default_factory=DiagnosticSink)
    pipeline: list = field(default_factory=list)

    @property
    def is_instrument(self) -> bool:
        return self.kind == "Instrument"

    def instruments(self) -> list:
        """Leaf instruments in pre-order (manifest order)."""
        if self.is_instrument:
            return [self]
        out = []
        for child in self.children:
            out.extend(child.instruments())
        return out


@dataclass
class TargetConfig:
    name: str = ""
    dt: float = 0.0
    qubits: int = 0
    instruments: list = field(default_factory=list)  # (uid, role, ports)
    calibration_path: str = ""
    gate_map: dict = field(default_factory=dict)     # (name, qids) -> seq sym


@dataclass(frozen=True)
class MixedFrameInfo:
    uid: str
    port_uid: str
    frame_uid: str
    frequency: float
    phase: float


@dataclass(frozen=True)
class CalEntry:
    sequence: str
    frame_uids: tuple


@dataclass
class CalibrationSet:
    entries: dict                 # (gate, qids) -> CalEntry
    defs: IrModule                # sequences + port/frame/mix_frame defs
    dt: float
    mixed_frames: dict            # uid -> MixedFrameInfo
    port_owner: dict              # port uid -> instrument uid

    def lookup(self, gate: str, qids: tuple) -> Optional[CalEntry]:
        return self.entries.get((gate, qids))

    def qubit_frames(self, qid: int) -> list[str]:
        """Mixed-frame uids belonging to one qubit, from its single-qubit
        calibration entries, deduplicated in entry order."""
        out: list[str] = []
        for (gate, qids), entry in sorted(self.entries.items(),
                                          key=lambda kv: kv[0]):
            if qids == (qid,):
                for uid in entry.frame_uids:
                    if uid not in out:
                        out.append(uid)
        return out


def _config_error(msg: str, line_no: int) -> Diagnostic:
    return error(Category.CONFIG_ERROR, f"line {line_no}: {msg}", None,
                 "target-config")


def parse_config(text: str) -> tuple[TargetConfig, list[Diagnostic]]:
    cfg = TargetConfig()
    diags: list[Diagnostic] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        key = fields[0]
        try:
            if key == "name" and len(fields) == 2:
                cfg.name = fields[1]
            elif key == "dt" and len(fields) == 2:
                cfg.dt = float(fields[1])
            elif key == "qubits" and len(fields) == 2:
                cfg.qubits = int(fields[1])
            elif key == "calibration" and len(fields) == 2:
                cfg.calibration_path = fields[1]
            elif key == "instrument":
                _parse_instrument(cfg, fields, line_no, diags)
            elif key == "gate":
                _parse_gate(cfg, fields, line_no, diags)
            else:
                diags.append(_config_error(f"unrecognized entry {key!r}",
                                           line_no))
        except ValueError as exc:
            diags.append(_config_error(str(exc), line_no))
    if not cfg.name:
        diags.append(_config_error("missing 'name'", 0))
    if cfg.dt <= 0:
        diags.append(_config_error("missing or non-positive 'dt'", 0))
    if cfg.qubits < 1:
        diags.append(_config_error("missing 'qubits'", 0))
    if not cfg.calibration_path:
        diags.append(_config_error("missing 'calibration'", 0))
    return cfg, diags


def _parse_instrument(cfg, fields, line_no, diags) -> None:
    if len(fields) < 3 or fields[2] not in ROLES:
        diags.append(_config_error(
            "expected: instrument <uid> <drive|acquire|hub> [ports p, ...]",
            line_no))
        return
    uid, role = fields[1], fields[2]
    ports: list[str] = []
    if len(fields) > 3:
        if fields[3] != "ports":
            diags.append(_config_error("expected 'ports'", line_no))
            return
        ports = [p for p in "".join(fields[4:]).split(",") if p]
    if role == HUB and ports:
        diags.append(_config_error("hub instruments take no ports", line_no))
        return
    cfg.instruments.append((uid, role, ports))


def _parse_gate(cfg, fields, line_no, diags) -> None:
    # gate <name> <qubit-ids...> -> <sequence-symbol>
    if "->" not in fields:
        diags.append(_config_error(
            "expected: gate <name> <qubit ids> -> <sequence>", line_no))
        return
    arrow = fields.index("->")
    if arrow < 2 or arrow != len(fields) - 2:
        diags.append(_config_error("malformed gate entry", line_no))
        return
    name = fields[1]
    qids = tuple(int(q) for q in fields[2:arrow])
    key = (name, qids)
    if key in cfg.gate_map:
        diags.append(_config_error(
            f"duplicate gate entry {name} {qids}", line_no))
        return
    cfg.gate_map[key] = fields[-1]


def build_tree(cfg: TargetConfig) -> tuple[Optional[TargetNode], list]:
    """Fig.-3-shaped tree: root system, one drive subsystem holding the
    drive instruments, acquire and hub instruments as direct children."""
    diags: list[Diagnostic] = []
    seen_uids: set = set()
    seen_ports: set = set()
    for uid, role, ports in cfg.instruments:
        if uid in seen_uids:
            diags.append(error(Category.CONFIG_ERROR,
                               f"duplicate instrument uid {uid!r}", None,
                               "target-config"))
        seen_uids.add(uid)
        for p in ports:
            if p in seen_ports:
                diags.append(error(
                    Category.CONFIG_ERROR,
                    f"port {p!r} appears under more than one instrument",
                    None, "target-config"))
            seen_ports.add(p)
    hubs = [i for i in cfg.instruments if i[1] == HUB]
    if len(hubs) != 1:
        diags.append(error(Category.CONFIG_ERROR,
                           f"expected exactly one hub instrument, found "
                           f"{len(hubs)}", None, "target-config"))
    if any(d.is_error for d in diags):
        return None, diags

    def instrument(uid, role, ports):
        return TargetNode("Instrument", uid, uid, instrument_role=role,
                          ports=list(ports),
                          pipeline=list(ROLE_PIPELINES[role]))

    root = TargetNode("System", cfg.name, cfg.name)
    drives = [i for i in cfg.instruments if i[1] == DRIVE]
    if drives:
        subsystem = TargetNode("System", "drive_subsystem",
                               f"{cfg.name}.drives")
        subsystem.children = [instrument(*d) for d in drives]
        root.children.append(subsystem)
    for inst in cfg.instruments:
        if inst[1] != DRIVE:
            root.children.append(instrument(*inst))
    return root, diags


def load_calibrations(cal_text: str, cfg: TargetConfig,
                      port_owner: dict) -> tuple[Optional[CalibrationSet], list]:
    diags: list[Diagnostic] = []
    module, parse_diags = parse_module(cal_text)
    diags.extend(parse_diags)
    if any(d.is_error for d in parse_diags):
        return None, diags
    broken = verify(module)
    if broken:
        diags.extend(broken)
        diags.append(error(Category.CONFIG_ERROR,
                           "calibration module fails verification", None,
                           "target-config"))
        return None, diags

    ports: dict[str, Operation] = {}
    frames: dict[str, Operation] = {}
    mixed: dict[str, MixedFrameInfo] = {}
    value_uid: dict = {}
    sequences: dict[str, Operation] = {}
    for op in module.block.ops:
        if op.name == "pulse.port":
            uid = op.attr("uid")
            ports[uid] = op
            value_uid[op.results[0]] = uid
        elif op.name == "pulse.frame":
            uid = op.attr("uid")
            if uid is None:
                diags.append(error(Category.CONFIG_ERROR,
                                   "calibration frame is missing a uid",
                                   None, "target-config"))
                continue
            frames[uid] = op
            value_uid[op.results[0]] = uid
        elif op.name == "pulse.mix_frame":
            uid = op.attr("uid")
            if uid is None:
                diags.append(error(Category.CONFIG_ERROR,
                                   "calibration mixed frame is missing a uid",
                                   None, "target-config"))
                continue
            port_uid = value_uid.get(op.operands[0])
            frame_uid = value_uid.get(op.operands[1])
            frame_op = frames.get(frame_uid)
            mixed[uid] = MixedFrameInfo(
                uid, port_uid, frame_uid,
                frame_op.attr("frequency") if frame_op else 0.0,
                frame_op.attr("phase") if frame_op else 0.0)
        elif op.name == "pulse.sequence":
            sequences[op.symbol_name] = op

    for op in module.walk():
        if op.name == "pulse.create_waveform" and not op.attr("samples"):
            diags.append(error(Category.CONFIG_ERROR,
                               "calibration contains an empty waveform",
                               None, "target-config"))

    entries: dict = {}
    for (gate, qids), seq_name in sorted(cfg.gate_map.items()):
        seq = sequences.get(seq_name)
        if seq is None:
            diags.append(error(
                Category.CONFIG_ERROR,
                f"gate entry {gate} {list(qids)}: no sequence @{seq_name} in "
                f"the calibration module", None, "target-config"))
            continue
        frames_attr = seq.attr("frames") or ""
        frame_uids = tuple(u for u in frames_attr.split(",") if u)
        missing = [u for u in frame_uids if u not in mixed]
        if missing:
            diags.append(error(
                Category.CONFIG_ERROR,
                f"sequence @{seq_name} references unknown mixed frames "
                f"{missing}", None, "target-config"))
            continue
        args = seq.body().args
        if len(args) < len(frame_uids) or any(
                a.type.kind is not TypeKind.MIXED_FRAME
                for a in args[:len(frame_uids)]):
            diags.append(error(
                Category.CONFIG_ERROR,
                f"sequence @{seq_name}: the first {len(frame_uids)} "
                f"arguments must be mixed frames", None, "target-config"))
            continue
        entries[(gate, qids)] = CalEntry(seq_name, frame_uids)

    for info in mixed.values():
        if info.port_uid not in port_owner:
            diags.append(error(
                Category.CONFIG_ERROR,
                f"mixed frame {info.uid!r} uses port {info.port_uid!r} which "
                f"no instrument owns", None, "target-config"))

    if any(d.is_error for d in diags):
        return None, diags
    cals = CalibrationSet(entries, module, cfg.dt, mixed, dict(port_owner))
    return cals, diags


def load_target(config_text: str, base_dir: str = ".") \
        -> tuple[Optional[TargetNode], Optional[CalibrationSet], list]:
    """Build the target tree and calibration set from a config file's text.

    The calibration .qeir path is resolved relative to base_dir.
    """
    cfg, diags = parse_config(config_text)
    if any(d.is_error for d in diags):
        return None, None, diags
    root, tree_diags = build_tree(cfg)
    diags.extend(tree_diags)
    if root is None:
        return None, None, diags

    cal_path = os.path.join(base_dir, cfg.calibration_path)
    try:
        with open(cal_path, "r", encoding="utf-8") as fh:
            cal_text = fh.read()
    except OSError as exc:
        diags.append(error(Category.CONFIG_ERROR,
                           f"cannot read calibration file {cal_path!r}: {exc}",
                           None, "target-config"))
        return None, None, diags

    port_owner = {}
    for uid, role, ports in cfg.instruments:
        for p in ports:
            port_owner[p] = uid
    cals, cal_diags = load_calibrations(cal_text, cfg, port_owner)
    diags.extend(cal_diags)
    if cals is None:
        return None, None, diags

    diags.extend(_check_qubit_coverage(cfg, cals))
    if any(d.is_error for d in diags):
        return None, None, diags
    return root, cals, diags


def _check_qubit_coverage(cfg: TargetConfig, cals: CalibrationSet) -> list:
    """Every qubit needs at least one drive port and one acquire port."""
    diags: list[Diagnostic] = []
    roles = {uid: role for uid, role, _ in cfg.instruments}
    for q in range(cfg.qubits):
        port_roles = set()
        for mf_uid in cals.qubit_frames(q):
            info = cals.mixed_frames[mf_uid]
            owner = cals.port_owner.get(info.port_uid)
            if owner is not None:
                port_roles.add(roles[owner])
        for needed in (DRIVE, ACQUIRE):
            if needed not in port_roles:
                diags.append(error(
                    Category.CONFIG_ERROR,
                    f"qubit {q} has no {needed} port in the calibrations",
                    None, "target-config"))
    return diags


def load_target_file(path: str) \
        -> tuple[Optional[TargetNode], Optional[CalibrationSet], list]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        return None, None, [error(Category.CONFIG_ERROR,
                                  f"cannot read target config {path!r}: {exc}",
                                  None, "target-config")]
    return load_target(text, os.path.dirname(path) or ".")
