"""Payload container: deterministic zip, manifest, parameter linker."""

import io
import json
import threading
import zipfile

import pytest

from qeforge.diagnostics import Category
from qeforge.payload import (MANIFEST_NAME, Payload, PayloadError, link,
                             read_qem, serialize_entries)


def make_payload(entries=None):
    p = Payload(target_name="mock")
    for name, data in (entries or {}).items():
        p.add_entry(name, data)
    return p


class TestEntries:
    def test_add_then_serialize(self):
        p = make_payload({"hub.bin": b"QEMOCK/1\n0: INIT\n"})
        zf = zipfile.ZipFile(io.BytesIO(p.serialize()))
        assert "hub.bin" in zf.namelist()

    def test_duplicate_entry_rejected(self):
        p = make_payload({"hub.bin": b"x"})
        with pytest.raises(PayloadError, match="DuplicateEntry"):
            p.add_entry("hub.bin", b"y")

    @pytest.mark.parametrize("bad", ["/abs", "a/../b", "", "a//b", "..",
                                     "\\\\evil"])
    def test_unsafe_names_rejected(self, bad):
        with pytest.raises(PayloadError):
            make_payload({bad: b"x"})

    def test_concurrent_adders_lose_nothing(self):
        p = make_payload()
        n_threads, per_thread = 8, 100

        def add(k):
            for i in range(per_thread):
                p.add_entry(f"t{k}-{i}.bin", b"data")

        threads = [threading.Thread(target=add, args=(k,))
                   for k in range(n_threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(p.entries()) == n_threads * per_thread


class TestSerialize:
    def test_empty_payload_contains_exactly_manifest(self):
        zf = zipfile.ZipFile(io.BytesIO(make_payload().serialize()))
        assert zf.namelist() == [MANIFEST_NAME]

    def test_serialize_twice_is_byte_identical(self):
        p = make_payload({"b.bin": b"1", "a.bin": b"2"})
        assert p.serialize() == p.serialize()

    def test_insertion_order_does_not_matter(self):
        p1 = make_payload({"a.bin": b"1", "b.bin": b"2"})
        p2 = make_payload({"b.bin": b"2", "a.bin": b"1"})
        assert p1.serialize() == p2.serialize()

    def test_manifest_first_then_sorted(self):
        p = make_payload({"z.bin": b"1", "a.bin": b"2", "m.qeir": b"3"})
        zf = zipfile.ZipFile(io.BytesIO(p.serialize()))
        assert zf.namelist() == [MANIFEST_NAME, "a.bin", "m.qeir", "z.bin"]

    def test_fixed_timestamps_and_store_compression(self):
        p = make_payload({"a.bin": b"payload-bytes"})
        zf = zipfile.ZipFile(io.BytesIO(p.serialize()))
        for info in zf.infolist():
            assert info.date_time == (1980, 1, 1, 0, 0, 0)
            assert info.compress_type == zipfile.ZIP_STORED

    def test_manifest_lists_every_file(self):
        p = make_payload({"a.bin": b"1", "b.qeir": b"2"})
        data = p.serialize()
        manifest, entries = read_qem(data)
        assert manifest["files"] == sorted(["a.bin", "b.qeir",
                                            MANIFEST_NAME])


class TestReadQem:
    def test_rejects_non_zip(self):
        with pytest.raises(PayloadError, match="CorruptPayload"):
            read_qem(b"definitely not a zip")

    def test_rejects_missing_manifest(self):
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w") as zf:
            zf.writestr("a.bin", b"1")
        with pytest.raises(PayloadError, match="manifest"):
            read_qem(buffer.getvalue())

    def test_rejects_path_escapes(self):
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w") as zf:
            zf.writestr(MANIFEST_NAME, b"{}")
            zf.writestr("../evil.bin", b"1")
        with pytest.raises(PayloadError, match="unsafe"):
            read_qem(buffer.getvalue())

    def test_rejects_manifest_without_parameters(self):
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w") as zf:
            zf.writestr(MANIFEST_NAME, b"{}")
        with pytest.raises(PayloadError, match="parameter"):
            read_qem(buffer.getvalue())


class TestLink:
    def qem_with_param(self, default=0.0):
        manifest = {
            "version": "1",
            "target": "t",
            "instruments": [{"uid": "d0", "role": "drive",
                             "files": ["d0.bin"]}],
            "parameters": {"theta": {"type": "angle", "default": default,
                                     "patches": [["d0.bin", 1, 1]]}},
            "files": sorted(["d0.bin", MANIFEST_NAME]),
        }
        binary = "QEMOCK/1\n0: INIT\n1: SHIFT_PHASE 0 0\n2: FINI\n"
        return serialize_entries(manifest, {"d0.bin": binary.encode()})

    def test_empty_binding_is_identity(self):
        qem = self.qem_with_param()
        assert link(qem, {}) == qem

    def test_patch_rewrites_encoded_argument(self):
        linked = link(self.qem_with_param(), {"theta": 0.5})
        manifest, entries = read_qem(linked)
        assert manifest["parameters"]["theta"]["default"] == 0.5
        assert "1: SHIFT_PHASE 0 500" in entries["d0.bin"].decode()

    def test_unknown_parameter(self):
        with pytest.raises(PayloadError, match="UnknownParameter"):
            link(self.qem_with_param(), {"nope": 1.0})

    @pytest.mark.parametrize("value", [float("nan"), float("inf"), "hi",
                                       None, [1.0]])
    def test_non_finite_or_non_numeric_rejected(self, value):
        with pytest.raises(PayloadError) as info:
            link(self.qem_with_param(), {"theta": value})
        assert info.value.category is Category.TYPE_MISMATCH

    def test_bad_patch_site_is_corrupt_payload(self):
        manifest, entries = read_qem(self.qem_with_param())
        manifest["parameters"]["theta"]["patches"] = [["d0.bin", 99, 0]]
        broken = serialize_entries(manifest, entries)
        with pytest.raises(PayloadError, match="CorruptPayload"):
            link(broken, {"theta": 1.0})

    def test_unpatchable_instruction_is_corrupt_payload(self):
        manifest, entries = read_qem(self.qem_with_param())
        manifest["parameters"]["theta"]["patches"] = [["d0.bin", 0, 0]]
        broken = serialize_entries(manifest, entries)
        with pytest.raises(PayloadError, match="not patchable"):
            link(broken, {"theta": 1.0})

    def test_link_is_deterministic(self):
        qem = self.qem_with_param()
        assert link(qem, {"theta": 1.25}) == link(qem, {"theta": 1.25})
