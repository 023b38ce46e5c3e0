"""Produced manifests must conform to the documented JSON schema."""

import json
from pathlib import Path

import jsonschema
import pytest

from qeforge.manager import CompileOptions, compile_source
from qeforge.payload import read_qem

from conftest import read_corpus

SCHEMA = json.loads(
    (Path(__file__).parents[1] / "docs" / "manifest.schema.json").read_text())
EXAMPLE = json.loads(
    (Path(__file__).parents[1] / "docs" / "manifest.example.json").read_text())


def test_schema_is_itself_valid():
    jsonschema.Draft7Validator.check_schema(SCHEMA)


def test_golden_example_validates():
    jsonschema.validate(EXAMPLE, SCHEMA)


def test_golden_example_matches_current_output(mock3q):
    root, cals = mock3q
    result = compile_source(read_corpus("params"), root, cals,
                            CompileOptions())
    manifest, _ = read_qem(result.payload)
    assert manifest == EXAMPLE


def test_every_corpus_manifest_validates(mock3q, corpus_program):
    root, cals = mock3q
    result = compile_source(corpus_program, root, cals, CompileOptions())
    assert result.ok
    manifest, entries = read_qem(result.payload)
    jsonschema.validate(manifest, SCHEMA)
    assert manifest["files"] == sorted(list(entries) + ["manifest.json"])


def test_linked_manifest_still_validates(mock3q):
    from qeforge.payload import link
    root, cals = mock3q
    result = compile_source(read_corpus("params"), root, cals,
                            CompileOptions())
    manifest, _ = read_qem(link(result.payload, {"theta": 2.5}))
    jsonschema.validate(manifest, SCHEMA)
    assert manifest["parameters"]["theta"]["default"] == 2.5
