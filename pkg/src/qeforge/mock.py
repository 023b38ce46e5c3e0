"""Mock target generation: an n-qubit control system with two qubits per
drive instrument, one acquire instrument holding every readout port, and
one hub. Calibrations cover U/h/x/rz on every qubit, cx/CX on adjacent
pairs (both orders), and measure on every qubit.

Run `python -m qeforge.mock <dir> [qubits]` to write mock<N>q.cfg and its
calibration module for use with the CLI.
"""

from __future__ import annotations

import math
import sys

from qeforge.ir.core import Block, IrModule, Operation, Region, Value
from qeforge.ir.printer import print_module
from qeforge.ir import types as T
from qeforge.ir.types import SymbolAttr

SX_LEN = 32
CR_LEN = 64
RO_LEN = 48


def _round(x: float) -> float:
    return round(x, 8)


def sx_samples() -> tuple:
    """Gaussian drive pulse with a derivative quadrature component."""
    sigma = SX_LEN / 5.0
    mid = (SX_LEN - 1) / 2.0
    out = []
    for i in range(SX_LEN):
        g = math.exp(-((i - mid) ** 2) / (2 * sigma * sigma))
        out.append((_round(0.5 * g), _round(-0.05 * (i - mid) / sigma * g)))
    return tuple(out)


def cr_samples() -> tuple:
    out = []
    ramp = 8
    for i in range(CR_LEN):
        edge = min(i + 1, CR_LEN - i, ramp) / ramp
        out.append((_round(0.3 * edge), 0.0))
    return tuple(out)


def ro_samples() -> tuple:
    return tuple((0.25, 0.0) for _ in range(RO_LEN))


class _CalBuilder:
    def __init__(self, num_qubits: int):
        self.n = num_qubits
        self.module = IrModule()
        self.mf: dict[str, Value] = {}

    def build(self) -> IrModule:
        for q in range(self.n):
            self.declare_qubit_frames(q)
        for q in range(self.n):
            self.seq_u(q)
            self.seq_h(q)
            self.seq_x(q)
            self.seq_rz(q)
            self.seq_reset(q)
            self.seq_measure(q)
        for a in range(self.n - 1):
            self.seq_cx(a, a + 1)
            self.seq_cx(a + 1, a)
        return self.module

    def declare_qubit_frames(self, q: int) -> None:
        m = self.module
        drive = m.add(m.make_op("pulse.port", result_types=[T.port()],
                                attrs={"uid": f"q{q}_drive"}))
        readout = m.add(m.make_op("pulse.port", result_types=[T.port()],
                                  attrs={"uid": f"q{q}_readout"}))
        dframe = m.add(m.make_op("pulse.frame", result_types=[T.frame()],
                                 attrs={"uid": f"q{q}_dframe",
                                        "frequency": 5.0e9 + q * 1.0e8,
                                        "phase": 0.0}))
        rframe = m.add(m.make_op("pulse.frame", result_types=[T.frame()],
                                 attrs={"uid": f"q{q}_rframe",
                                        "frequency": 6.5e9 + q * 1.0e8,
                                        "phase": 0.0}))
        cframe = m.add(m.make_op("pulse.frame", result_types=[T.frame()],
                                 attrs={"uid": f"q{q}_cframe",
                                        "frequency": 6.5e9 + q * 1.0e8,
                                        "phase": 0.0}))
        for name, port_op, frame_op in (
                (f"q{q}_drive_mf", drive, dframe),
                (f"q{q}_readout_mf", readout, rframe),
                (f"q{q}_capture_mf", readout, cframe)):
            op = m.add(m.make_op(
                "pulse.mix_frame", [port_op.results[0], frame_op.results[0]],
                result_types=[T.mixed_frame()], attrs={"uid": name}))
            self.mf[name] = op.results[0]

    def sequence(self, name: str, frames: list[str], extra_args: list,
                 build) -> None:
        """Create a sequence: block args are the named mixed frames then
        extra (name, type) parameters; `build(block, mfs, params)` fills it."""
        m = self.module
        args = [m.new_value(T.mixed_frame()) for _ in frames]
        params = [m.new_value(ty) for _, ty in extra_args]
        block = Block(args + params)
        returns = build(block, args, params)
        block.ops.append(Operation("pulse.return", returns or []))
        m.add(Operation("pulse.sequence",
                        attrs={"sym_name": SymbolAttr(name),
                               "frames": ",".join(frames)},
                        regions=[Region([block])]))

    def _push(self, block, op):
        block.ops.append(op)
        return op

    def _waveform(self, block, samples):
        op = self.module.make_op("pulse.create_waveform",
                                 result_types=[T.waveform()],
                                 attrs={"samples": samples})
        return self._push(block, op).results[0]

    def _const(self, block, value: float):
        op = self.module.make_op("builtin.float_const",
                                 result_types=[T.f64()],
                                 attrs={"value": float(value)})
        return self._push(block, op).results[0]

    def seq_u(self, q: int) -> None:
        def build(block, mfs, params):
            mf = mfs[0]
            theta, phi, lam = params
            wf = self._waveform(block, sx_samples())
            self._push(block, Operation("pulse.shift_phase", [mf, lam]))
            self._push(block, Operation("pulse.play", [mf, wf]))
            self._push(block, Operation("pulse.shift_phase", [mf, theta]))
            self._push(block, Operation("pulse.play", [mf, wf]))
            self._push(block, Operation("pulse.shift_phase", [mf, phi]))

        self.sequence(f"u_q{q}", [f"q{q}_drive_mf"],
                      [("theta", T.f64()), ("phi", T.f64()),
                       ("lam", T.f64())], build)

    def seq_h(self, q: int) -> None:
        def build(block, mfs, params):
            mf = mfs[0]
            wf = self._waveform(block, sx_samples())
            self._push(block, Operation(
                "pulse.shift_phase", [mf, self._const(block, math.pi)]))
            self._push(block, Operation("pulse.play", [mf, wf]))
            self._push(block, Operation(
                "pulse.shift_phase", [mf, self._const(block, math.pi / 2)]))
            self._push(block, Operation("pulse.play", [mf, wf]))

        self.sequence(f"h_q{q}", [f"q{q}_drive_mf"], [], build)

    def seq_x(self, q: int) -> None:
        def build(block, mfs, params):
            mf = mfs[0]
            wf = self._waveform(block, sx_samples())
            self._push(block, Operation("pulse.play", [mf, wf]))
            self._push(block, Operation("pulse.play", [mf, wf]))

        self.sequence(f"x_q{q}", [f"q{q}_drive_mf"], [], build)

    def seq_rz(self, q: int) -> None:
        def build(block, mfs, params):
            self._push(block, Operation("pulse.shift_phase",
                                        [mfs[0], params[0]]))

        self.sequence(f"rz_q{q}", [f"q{q}_drive_mf"],
                      [("angle", T.f64())], build)

    def seq_reset(self, q: int) -> None:
        # Unconditional mock reset: re-pin the frame state, then one pulse.
        def build(block, mfs, params):
            mf = mfs[0]
            self._push(block, Operation(
                "pulse.set_frequency", [mf, self._const(block,
                                                        5.0e9 + q * 1.0e8)]))
            self._push(block, Operation(
                "pulse.shift_frequency", [mf, self._const(block, 0.0)]))
            self._push(block, Operation(
                "pulse.set_phase", [mf, self._const(block, 0.0)]))
            wf = self._waveform(block, sx_samples())
            self._push(block, Operation("pulse.play", [mf, wf]))

        self.sequence(f"reset_q{q}", [f"q{q}_drive_mf"], [], build)

    def seq_cx(self, control: int, target: int) -> None:
        def build(block, mfs, params):
            mf_c, mf_t = mfs
            self._push(block, Operation("pulse.barrier", [mf_c, mf_t]))
            cr = self._waveform(block, cr_samples())
            self._push(block, Operation("pulse.play", [mf_c, cr]))
            sx = self._waveform(block, sx_samples())
            self._push(block, Operation("pulse.play", [mf_t, sx]))
            self._push(block, Operation("pulse.barrier", [mf_c, mf_t]))

        self.sequence(f"cx_q{control}q{target}",
                      [f"q{control}_drive_mf", f"q{target}_drive_mf"],
                      [], build)

    def seq_measure(self, q: int) -> None:
        def build(block, mfs, params):
            rmf, cmf = mfs
            self._push(block, Operation("pulse.barrier", [rmf, cmf]))
            wf = self._waveform(block, ro_samples())
            self._push(block, Operation("pulse.play", [rmf, wf]))
            capture = self.module.make_op(
                "pulse.capture", [cmf], result_types=[T.i1()],
                attrs={"duration": RO_LEN})
            self._push(block, capture)
            return capture.results

        self.sequence(f"measure_q{q}",
                      [f"q{q}_readout_mf", f"q{q}_capture_mf"], [], build)


def mock_calibrations(num_qubits: int = 3) -> str:
    return print_module(_CalBuilder(num_qubits).build())


def mock_config(num_qubits: int = 3, cal_file: str | None = None,
                dt: float = 1e-9, qubits_per_drive: int = 2) -> str:
    name = f"mock{num_qubits}q"
    cal_file = cal_file or f"{name}_cals.qeir"
    lines = [
        f"# {name}: generated mock control system",
        f"name {name}",
        f"dt {dt!r}",
        f"qubits {num_qubits}",
        f"calibration {cal_file}",
    ]
    for first in range(0, num_qubits, qubits_per_drive):
        qs = range(first, min(first + qubits_per_drive, num_qubits))
        ports = ", ".join(f"q{q}_drive" for q in qs)
        lines.append(f"instrument drive{first // qubits_per_drive} drive "
                     f"ports {ports}")
    readout = ", ".join(f"q{q}_readout" for q in range(num_qubits))
    lines.append(f"instrument acquire0 acquire ports {readout}")
    lines.append("instrument hub0 hub")
    for q in range(num_qubits):
        lines.append(f"gate U {q} -> u_q{q}")
        lines.append(f"gate h {q} -> h_q{q}")
        lines.append(f"gate x {q} -> x_q{q}")
        lines.append(f"gate rz {q} -> rz_q{q}")
        lines.append(f"gate reset {q} -> reset_q{q}")
        lines.append(f"gate measure {q} -> measure_q{q}")
    for a in range(num_qubits - 1):
        for c, t in ((a, a + 1), (a + 1, a)):
            lines.append(f"gate cx {c} {t} -> cx_q{c}q{t}")
            lines.append(f"gate CX {c} {t} -> cx_q{c}q{t}")
    return "\n".join(lines) + "\n"


def write_mock_target(directory: str, num_qubits: int = 3) -> str:
    """Write mock<N>q.cfg plus calibrations into `directory`; returns the
    config path."""
    import os
    name = f"mock{num_qubits}q"
    os.makedirs(directory, exist_ok=True)
    cal_path = os.path.join(directory, f"{name}_cals.qeir")
    cfg_path = os.path.join(directory, f"{name}.cfg")
    with open(cal_path, "w", encoding="utf-8") as fh:
        fh.write(mock_calibrations(num_qubits))
    with open(cfg_path, "w", encoding="utf-8") as fh:
        fh.write(mock_config(num_qubits))
    return cfg_path


if __name__ == "__main__":
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "."
    n = int(sys.argv[2]) if len(sys.argv) > 2 else 3
    print(write_mock_target(out_dir, n))
