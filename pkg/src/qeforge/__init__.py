"""qe-forge: OpenQASM 3 subset to quantum-control-system payload compiler.

The compiler front end parses an OpenQASM 3 subset into an AST, walks it
into a multi-dialect SSA IR (oq3 / quir / qcs / pulse), runs the
system-level pass pipeline (circuit extraction, variable lowering, reset
parallelization, pulse lowering against target calibrations, ASAP
scheduling), localizes the program into one module per instrument, and
emits per-instrument mock binaries packaged as a deterministic .qem zip.
Compiled payloads can be re-linked with new parameter values without
recompilation.
"""

from qeforge.manager import CompileOptions, CompileResult, compile_source
from qeforge.payload import Payload, PayloadError, link, read_qem
from qeforge.target import load_target, load_target_file

__version__ = "0.1.0"

__all__ = [
    "CompileOptions", "CompileResult", "compile_source",
    "Payload", "PayloadError", "link", "read_qem",
    "load_target", "load_target_file",
    "__version__",
]
