import { spawnSync } from "node:child_process";
import { readFileSync, readdirSync } from "node:fs";
import { join, resolve } from "node:path";
import { CompilerSession } from "../src/session.js";
/** Repo root (bindings/ lives directly under it). */
export const REPO_ROOT = resolve(process.cwd(), "..");
export const CORPUS_DIR = join(REPO_ROOT, "tests", "corpus");
export const TARGET_3Q = join(REPO_ROOT, "tests", "data", "mock3q.cfg");
export const TARGET_1Q = join(REPO_ROOT, "tests", "data", "mock1q.cfg");
/** Compiler argv: $QE_FORGE_BIN, else the module run from the source tree. */
export function compilerCommand() {
    const fromEnv = process.env.QE_FORGE_BIN?.split(/\s+/).filter(Boolean);
    if (fromEnv !== undefined && fromEnv.length > 0) {
        return fromEnv;
    }
    return ["python3", "-m", "qeforge.cli"];
}
export function compilerEnv() {
    const src = join(REPO_ROOT, "src");
    const existing = process.env.PYTHONPATH;
    return {
        PYTHONPATH: existing ? `${src}:${existing}` : src,
    };
}
export function makeSession(extra = {}) {
    return new CompilerSession({
        command: compilerCommand(),
        targetConfig: TARGET_3Q,
        env: compilerEnv(),
        ...extra,
    });
}
/** Run the CLI directly (the reference the bindings must match). */
export function runCli(args, stdin) {
    const command = compilerCommand();
    const result = spawnSync(command[0], [...command.slice(1), ...args], {
        input: stdin,
        env: { ...process.env, ...compilerEnv() },
        maxBuffer: 256 * 1024 * 1024,
    });
    if (result.error !== undefined) {
        throw result.error;
    }
    if (result.status !== 0) {
        throw new Error(`CLI exited ${result.status}: ${result.stderr}`);
    }
    return result.stdout;
}
export function corpusPrograms() {
    return readdirSync(CORPUS_DIR)
        .filter((name) => name.endsWith(".qasm"))
        .sort()
        .map((name) => ({
        name,
        source: readFileSync(join(CORPUS_DIR, name), "utf-8"),
    }));
}
