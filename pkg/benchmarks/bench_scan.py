#!/usr/bin/env python3
"""Benchmark: compiled scanner kernel vs the pure-Python fallback.

Builds a large synthetic OpenQASM program and a large IR module text, then
times both kernels on both inputs. Run from the repo root:

    python benchmarks/bench_scan.py [repeats]
"""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qeforge._scan_py import MODE_IR, MODE_QASM, scan as scan_pure  # noqa: E402

try:
    from qeforge._speedups import scan as scan_native  # noqa: E402
except ImportError:
    scan_native = None


def qasm_corpus(repeats: int) -> bytes:
    block = (
        "// synthetic benchmark block\n"
        "qubit $0; qubit $1; qubit $2;\n"
        "reset $0; reset $1; reset $2;\n"
        "U(1.57079632679, 0.0, 3.14159265359) $0;\n"
        "CX $0, $1;\n"
        "delay[120ns] $2;\n"
        "bit mid = measure $2;\n"
        "if (mid) { U(0.5, -0.25, 1e-3) $1; } else { CX $1, $2; }\n"
        "bit[2] fin;\n"
        "fin[0] = measure $0;\n"
        "fin[1] = measure $1;\n"
    )
    return (block * repeats).encode()


def ir_corpus(repeats: int) -> bytes:
    block = (
        "  %0 = quir.declare_qubit() {id = 0} : () -> (!quir.qubit<1>)\n"
        "  %1 = quir.constant() {value = #angle<1.5707963>} : "
        "() -> (!quir.angle<64>)\n"
        "  quir.builtin_U(%0, %1, %1, %1) : (!quir.qubit<1>, "
        "!quir.angle<64>, !quir.angle<64>, !quir.angle<64>) -> ()\n"
        "  %2 = quir.measure(%0) : (!quir.qubit<1>) -> (i1)\n"
        "  pulse.shift_phase(%3, %4) : (!pulse.mixed_frame, f64) -> ()\n"
    )
    return ("module {\n" + block * repeats + "}\n").encode()


def time_kernel(fn, data: bytes, mode: int, rounds: int) -> float:
    best = float("inf")
    for _ in range(rounds):
        started = time.perf_counter()
        fn(data, mode)
        best = min(best, time.perf_counter() - started)
    return best


def main() -> int:
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    rounds = 5
    inputs = [("qasm", qasm_corpus(repeats), MODE_QASM),
              ("ir", ir_corpus(repeats), MODE_IR)]
    print(f"{'input':>6} {'bytes':>10} {'kernel':>12} {'best':>10} "
          f"{'throughput':>12}")
    speedups = []
    for name, data, mode in inputs:
        pure = time_kernel(scan_pure, data, mode, rounds)
        rows = [("pure-python", pure)]
        if scan_native is not None:
            native = time_kernel(scan_native, data, mode, rounds)
            rows.append(("native", native))
            speedups.append(pure / native)
        for kernel, best in rows:
            print(f"{name:>6} {len(data):>10} {kernel:>12} "
                  f"{best * 1e3:>8.2f}ms {len(data) / best / 1e6:>9.1f} MB/s")
    if scan_native is None:
        print("\ncompiled kernel not built; run "
              "`python setup.py build_ext --inplace` first")
        return 1
    print(f"\nnative speedup: {min(speedups):.1f}x - {max(speedups):.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
