"""QEM payload: named-file collection serialized as a deterministic zip,
plus the parameter linker that patches compiled binaries in place.

Determinism rules: entries are stored uncompressed with a fixed timestamp
and permissions, manifest.json first and everything else sorted by name;
manifest JSON is UTF-8 with sorted keys and no insignificant whitespace.
Equal logical content therefore serializes to identical bytes.
"""

from __future__ import annotations

import io
import json
import math
import threading
import zipfile

from qeforge.diagnostics import Category

MANIFEST_NAME = "manifest.json"
_FIXED_DATE = (1980, 1, 1, 0, 0, 0)

# Opcode -> argument encoder for patchable arguments.
_ENCODERS = {
    "SHIFT_PHASE": lambda v: _round_half_away(v * 1000.0),
    "SET_PHASE": lambda v: _round_half_away(v * 1000.0),
    "SHIFT_FREQ": lambda v: _round_half_away(v * 1000.0),
    "SET_FREQ": lambda v: _round_half_away(v * 1000.0),
}


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


class PayloadError(Exception):
    def __init__(self, category: Category, message: str):
        super().__init__(message)
        self.category = category


class Payload:
    """Filename -> bytes map with a manifest; add_entry is thread-safe."""

    def __init__(self, target_name: str = ""):
        self._entries: dict[str, bytes] = {}
        self._lock = threading.Lock()
        self.target_name = target_name
        self.instruments: list[dict] = []   # {"uid", "role", "files"}
        self.parameters: dict[str, dict] = {}

    def add_entry(self, name: str, data: bytes) -> None:
        _check_entry_name(name)
        with self._lock:
            if name in self._entries:
                raise PayloadError(Category.INTERNAL_ERROR,
                                   f"DuplicateEntry: {name!r} already present")
            self._entries[name] = bytes(data)

    def entries(self) -> dict[str, bytes]:
        with self._lock:
            return dict(self._entries)

    def manifest(self) -> dict:
        names = sorted(self._entries)
        return {
            "version": "1",
            "target": self.target_name,
            "instruments": self.instruments,
            "parameters": self.parameters,
            "files": sorted(names + [MANIFEST_NAME]),
        }

    def serialize(self) -> bytes:
        return serialize_entries(self.manifest(), self.entries())


def _check_entry_name(name: str) -> None:
    if not name or name.startswith("/") or name.startswith("\\"):
        raise PayloadError(Category.LINK_ERROR,
                           f"entry name must be relative: {name!r}")
    parts = name.replace("\\", "/").split("/")
    if ".." in parts or "" in parts:
        raise PayloadError(Category.LINK_ERROR,
                           f"unsafe entry name: {name!r}")


def _manifest_bytes(manifest: dict) -> bytes:
    return json.dumps(manifest, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")


def serialize_entries(manifest: dict, entries: dict[str, bytes]) -> bytes:
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_STORED) as zf:
        ordered = [(MANIFEST_NAME, _manifest_bytes(manifest))]
        ordered += sorted(entries.items())
        for name, data in ordered:
            info = zipfile.ZipInfo(name, date_time=_FIXED_DATE)
            info.compress_type = zipfile.ZIP_STORED
            info.create_system = 3          # unix
            info.external_attr = 0o644 << 16
            zf.writestr(info, data)
    return buffer.getvalue()


def read_qem(data: bytes) -> tuple[dict, dict[str, bytes]]:
    """(manifest, entries) from .qem bytes; rejects unsafe names."""
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
        names = zf.namelist()
    except (zipfile.BadZipFile, ValueError) as exc:
        raise PayloadError(Category.LINK_ERROR,
                           f"CorruptPayload: not a zip archive ({exc})")
    entries: dict[str, bytes] = {}
    for name in names:
        _check_entry_name(name)
        entries[name] = zf.read(name)
    manifest_data = entries.pop(MANIFEST_NAME, None)
    if manifest_data is None:
        raise PayloadError(Category.LINK_ERROR,
                           "CorruptPayload: missing manifest.json")
    try:
        manifest = json.loads(manifest_data)
    except json.JSONDecodeError as exc:
        raise PayloadError(Category.LINK_ERROR,
                           f"CorruptPayload: bad manifest ({exc})")
    if not isinstance(manifest, dict) or "parameters" not in manifest:
        raise PayloadError(Category.LINK_ERROR,
                           "CorruptPayload: manifest has no parameter table")
    return manifest, entries


def link(qem: bytes, binding: dict) -> bytes:
    """Patch parameter values into a compiled payload without recompiling.

    Every patch site of every bound symbol is rewritten with the encoded
    value; manifest defaults are updated; unbound parameters keep their
    previous values. Output is re-serialized deterministically.
    """
    manifest, entries = read_qem(qem)
    params = manifest["parameters"]
    for symbol, value in binding.items():
        if symbol not in params:
            raise PayloadError(Category.LINK_ERROR,
                               f"UnknownParameter: {symbol!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) \
                or not math.isfinite(float(value)):
            raise PayloadError(
                Category.TYPE_MISMATCH,
                f"parameter {symbol!r} needs a finite number, got {value!r}")

    patched: dict[str, list] = {}
    for symbol, value in sorted(binding.items()):
        spec = params[symbol]
        spec["default"] = float(value)
        for file_name, line_idx, arg_idx in spec.get("patches", []):
            if file_name not in entries:
                raise PayloadError(Category.LINK_ERROR,
                                   f"CorruptPayload: patch references missing "
                                   f"file {file_name!r}")
            lines = patched.get(file_name)
            if lines is None:
                lines = entries[file_name].decode("utf-8").split("\n")
                patched[file_name] = lines
            _apply_patch(lines, file_name, line_idx, arg_idx, float(value))
    for file_name, lines in patched.items():
        entries[file_name] = "\n".join(lines).encode("utf-8")
    return serialize_entries(manifest, entries)


def _apply_patch(lines: list, file_name: str, line_idx: int, arg_idx: int,
                 value: float) -> None:
    # Binary layout: line 0 is the QEMOCK header; instruction i is line i+1.
    row = line_idx + 1
    if row >= len(lines) or ":" not in lines[row]:
        raise PayloadError(Category.LINK_ERROR,
                           f"CorruptPayload: {file_name} has no instruction "
                           f"{line_idx}")
    prefix, _, rest = lines[row].partition(":")
    fields = rest.split()
    opcode = fields[0] if fields else ""
    encoder = _ENCODERS.get(opcode)
    if encoder is None or arg_idx + 1 >= len(fields):
        raise PayloadError(Category.LINK_ERROR,
                           f"CorruptPayload: instruction {line_idx} of "
                           f"{file_name} is not patchable")
    fields[arg_idx + 1] = str(encoder(value))
    lines[row] = f"{prefix}: {' '.join(fields)}"
