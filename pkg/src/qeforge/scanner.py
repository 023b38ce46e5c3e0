"""Scanner backend selection: compiled kernel when available, else pure Python.

Set QEFORGE_PURE=1 to force the pure-Python kernel (used by the benchmark
and the differential tests).
"""

import os

from qeforge._scan_py import (  # noqa: F401  (kind constants re-exported)
    K_DURATION,
    K_ERROR,
    K_FLOAT,
    K_HWQUBIT,
    K_IDENT,
    K_INT,
    K_PUNCT,
    K_STRING,
    K_SYMBOL,
    K_VALUE,
    MODE_IR,
    MODE_QASM,
)
from qeforge._scan_py import scan as _scan_pure

if os.environ.get("QEFORGE_PURE"):
    scan = _scan_pure
    BACKEND = "pure-python"
else:
    try:
        from qeforge._speedups import scan  # type: ignore[no-redef]
        BACKEND = "native"
    except ImportError:
        scan = _scan_pure
        BACKEND = "pure-python"

scan_pure = _scan_pure
