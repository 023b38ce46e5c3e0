/** Diagnostic-to-exception mapping and process failure modes. */

import assert from "node:assert/strict";
import { test } from "node:test";

import {
  CompilerNotFoundError,
  CompilerTimeoutError,
  CorruptPayloadError,
  MissingCalibrationError,
  QasmParseError,
  QeForgeError,
  TypeMismatchError,
  UnknownParameterError,
  UnknownSymbolError,
  UnsupportedInputError,
  errorFromDiagnostics,
  parseDiagnosticStream,
} from "../src/index.js";
import { compilerEnv, makeSession } from "./helpers.js";

const session = makeSession();

test("virtual qubits raise UnsupportedInputError with line and column", () => {
  assert.throws(
    () => session.compileStr("qubit q0;", { emit: "ast" }),
    (err: unknown) => {
      assert.ok(err instanceof UnsupportedInputError);
      assert.ok(err instanceof QeForgeError);
      assert.match(err.message, /physical qubits required/);
      assert.equal(err.line, 1);
      assert.ok((err.col ?? 0) >= 1);
      return true;
    });
});

test("syntax garbage raises QasmParseError", () => {
  assert.throws(
    () => session.compileStr("OPENQASM 3.0;\nqubit $$$;", { emit: "ast" }),
    QasmParseError);
});

test("measuring into a wide register raises TypeMismatchError", () => {
  const source = "OPENQASM 3.0;\nqubit $0;\nbit[2] w;\nw = measure $0;\n";
  assert.throws(
    () => session.compileStr(source, { emit: "ir-initial" }),
    TypeMismatchError);
});

test("unknown gates raise UnknownSymbolError", () => {
  const source = "OPENQASM 3.0;\nqubit $0;\nmystery $0;\n";
  assert.throws(
    () => session.compileStr(source, { emit: "ir-initial" }),
    UnknownSymbolError);
});

test("uncalibrated gates raise MissingCalibrationError", () => {
  const source =
    "OPENQASM 3.0;\ngate zz a, b { CX a, b; }\nqubit $0; qubit $1;\nzz $0, $1;\n";
  assert.throws(() => session.compileStr(source), MissingCalibrationError);
});

test("unknown link parameter raises UnknownParameterError", () => {
  const base = session.compileStr("OPENQASM 3.0;\n");
  assert.throws(() => session.linkBytes(base, { ghost: 1.0 }),
    UnknownParameterError);
});

test("corrupt payload raises CorruptPayloadError", () => {
  assert.throws(
    () => session.linkBytes(Buffer.from("this is not a zip"), { x: 1 }),
    CorruptPayloadError);
});

test("diagnostics are attached to the raised error", () => {
  try {
    session.compileStr("qubit q0;", { emit: "ast" });
    assert.fail("expected a throw");
  } catch (err) {
    assert.ok(err instanceof QeForgeError);
    assert.ok(err.diagnostics.length >= 1);
    const categories = err.diagnostics.map((d) => d.category);
    assert.ok(categories.includes("UnsupportedInput"));
  }
});

test("a missing executable fails at session creation", () => {
  assert.throws(
    () => makeSession({ command: ["definitely-not-a-compiler-xyz"] }),
    CompilerNotFoundError);
});

test("calls that exceed the timeout raise CompilerTimeoutError", () => {
  const impatient = makeSession({ timeoutMs: 10_000 });
  // rebuild with a 1 ms budget after the probe has passed
  (impatient as unknown as { timeoutMs: number }).timeoutMs = 1;
  assert.throws(
    () => impatient.compileStr("OPENQASM 3.0;\n"),
    CompilerTimeoutError);
});

test("stream parser ignores non-JSON stderr noise", () => {
  const stream = parseDiagnosticStream(
    "warning: something\n" +
    '{"severity": "error", "category": "LinkError", "message": ' +
    '"UnknownParameter: \'x\'", "line": null, "col": null, "phase": "link"}\n' +
    "{broken json\n");
  assert.equal(stream.length, 1);
  const err = errorFromDiagnostics(stream);
  assert.ok(err instanceof UnknownParameterError);
});
