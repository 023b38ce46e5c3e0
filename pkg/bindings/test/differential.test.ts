/** Differential tests: binding output must equal CLI output byte for byte. */

import assert from "node:assert/strict";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import {
  TARGET_3Q,
  corpusPrograms,
  makeSession,
  runCli,
} from "./helpers.js";

const session = makeSession();

test("compileStr matches the CLI byte-for-byte on the corpus", () => {
  for (const { name, source } of corpusPrograms()) {
    const viaBinding = session.compileStr(source);
    const viaCli = runCli(
      ["-", "--target", TARGET_3Q, "--diagnostics", "json", "-o", "-"],
      source);
    assert.ok(viaBinding.equals(viaCli), `payload mismatch for ${name}`);
  }
});

test("intermediate emits match the CLI too", () => {
  const source = corpusPrograms().find((p) => p.name === "listing1.qasm")!;
  for (const emit of ["ast", "ir-initial"] as const) {
    const viaBinding = session.compileStr(source.source, { emit });
    const viaCli = runCli(["-", "--emit", emit, "--diagnostics", "json",
      "-o", "-"], source.source);
    assert.ok(viaBinding.equals(viaCli), emit);
  }
});

test("header-only program compiles to a valid minimal payload", () => {
  const payload = session.compileStr("OPENQASM 3.0;\n");
  // zip local-file-header magic, and the manifest is the first entry
  assert.equal(payload.subarray(0, 4).toString("latin1"), "PK");
  assert.ok(payload.includes(Buffer.from("manifest.json")));
});

test("compile options flow through (num shots changes bytes)", () => {
  const source = "OPENQASM 3.0;\nqubit $0;\nreset $0;\n";
  const a = session.compileStr(source, { numShots: 3 });
  const b = session.compileStr(source, { numShots: 4 });
  assert.ok(!a.equals(b));
  const viaCli = runCli(["-", "--target", TARGET_3Q, "--num-shots", "3",
    "--diagnostics", "json", "-o", "-"], source);
  assert.ok(a.equals(viaCli));
});

test("linkBytes equals a direct compile at the same value", () => {
  const source = corpusPrograms().find((p) => p.name === "params.qasm")!;
  const base = session.compileStr(source.source);
  for (const theta of [0.5, -1.25, 3.14159]) {
    const linked = session.linkBytes(base, { theta });
    const direct = session.compileStr(source.source,
      { params: { theta } });
    assert.ok(linked.equals(direct), `theta=${theta}`);
  }
});

test("linkBytes with empty params is the identity", () => {
  const base = session.compileStr("OPENQASM 3.0;\n");
  const relinked = session.linkBytes(base, {});
  assert.ok(relinked.equals(base));
});

test("linkBytes matches the CLI link path byte-for-byte", () => {
  const source = corpusPrograms().find((p) => p.name === "params.qasm")!;
  const base = session.compileStr(source.source);
  const viaBinding = session.linkBytes(base, { theta: 0.75 });
  const dir = mkdtempSync(join(tmpdir(), "qe-forge-clilink-"));
  try {
    const input = join(dir, "base.qem");
    writeFileSync(input, base);
    const viaCli = runCli(["--link", input, "-P", "theta=0.75",
      "--diagnostics", "json", "-o", "-"]);
    assert.ok(viaBinding.equals(viaCli));
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
});

test("100 sequential compile calls in one parent process succeed", () => {
  const source = "OPENQASM 3.0;\nqubit $0;\nreset $0;\n";
  const reference = session.compileStr(source);
  for (let i = 0; i < 100; i++) {
    const payload = session.compileStr(source);
    assert.ok(payload.equals(reference), `call ${i} diverged`);
  }
});
