"""Diagnostic records shared by every compilation phase.

Diagnostics flow by value: phases return lists, target nodes accumulate
them during instrument pipelines, and `collect` merges everything into a
stable order for the caller.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


class Category(Enum):
    QASM_PARSE_FAILURE = "QASMParseFailure"
    UNSUPPORTED_INPUT = "UnsupportedInput"
    TYPE_MISMATCH = "TypeMismatch"
    UNKNOWN_SYMBOL = "UnknownSymbol"
    MISSING_CALIBRATION = "MissingCalibration"
    SCHEDULE_ERROR = "ScheduleError"
    CONFIG_ERROR = "ConfigError"
    LINK_ERROR = "LinkError"
    INTERNAL_ERROR = "InternalError"


@dataclass(frozen=True)
class SourceSpan:
    """Half-open byte range [start, end) plus the line/column of start.

    Offsets index the UTF-8 encoding of the source; line and column are
    1-based and column counts bytes.
    """

    start: int
    end: int
    line: int
    col: int

    def __post_init__(self):
        assert self.start <= self.end, "span start must not exceed end"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    category: Category
    message: str
    span: Optional[SourceSpan] = None
    phase: str = ""

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def render_human(self) -> str:
        loc = f":{self.span.line}:{self.span.col}" if self.span else ""
        return f"{self.severity.value}{loc}: [{self.category.value}] {self.message}"

    def render_json(self) -> str:
        record = {
            "severity": self.severity.value,
            "category": self.category.value,
            "message": self.message,
            "line": self.span.line if self.span else None,
            "col": self.span.col if self.span else None,
            "phase": self.phase,
        }
        return json.dumps(record, sort_keys=True)


def error(category: Category, message: str, span: Optional[SourceSpan] = None,
          phase: str = "") -> Diagnostic:
    return Diagnostic(Severity.ERROR, category, message, span, phase)


def warning(category: Category, message: str, span: Optional[SourceSpan] = None,
            phase: str = "") -> Diagnostic:
    return Diagnostic(Severity.WARNING, category, message, span, phase)


def has_errors(diags) -> bool:
    return any(d.is_error for d in diags)


@dataclass
class DiagnosticSink:
    """Append-only diagnostic list owned by one producer (e.g. a target node).

    Appends from the owning pipeline are serialized by the list's own atomicity
    under CPython; distinct sinks may be filled from distinct threads.
    """

    items: list = field(default_factory=list)

    def add(self, diag: Diagnostic) -> None:
        self.items.append(diag)

    def extend(self, diags) -> None:
        for d in diags:
            self.items.append(d)


def collect(root, phase_diags) -> list:
    """Phase diagnostics followed by per-node diagnostics in tree pre-order.

    `root` is a target-system node with `.children` and `.diagnostics`
    (a DiagnosticSink). Order is independent of pipeline completion order.
    """
    out = list(phase_diags)

    def visit(node):
        out.extend(node.diagnostics.items)
        for child in node.children:
            visit(child)

    visit(root)
    return out
