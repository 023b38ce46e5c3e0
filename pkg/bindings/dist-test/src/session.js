import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { CompilerNotFoundError, CompilerProcessError, CompilerTimeoutError, errorFromDiagnostics, parseDiagnosticStream, } from "./errors.js";
const MAX_BUFFER = 256 * 1024 * 1024;
/** Drives the compiler CLI, one isolated child process per call.
 *
 * The compiler (like most LLVM-based tools) is not built to be invoked
 * repeatedly in one process; a fresh child per call keeps state from
 * leaking between compilations, so a long-lived parent can call
 * compileStr/linkBytes any number of times.
 */
export class CompilerSession {
    command;
    targetConfig;
    timeoutMs;
    env;
    constructor(options = {}) {
        const fromEnv = process.env.QE_FORGE_BIN?.split(/\s+/).filter(Boolean);
        this.command = options.command ?? fromEnv ?? ["qe-forge"];
        this.targetConfig = options.targetConfig;
        this.timeoutMs = options.timeoutMs ?? 120_000;
        this.env = { ...process.env, ...(options.env ?? {}) };
        this.probe();
    }
    /** The executable must exist and run at session creation. */
    probe() {
        const result = spawnSync(this.command[0], [...this.command.slice(1), "--help"], {
            env: this.env,
            timeout: this.timeoutMs,
            maxBuffer: MAX_BUFFER,
        });
        if (result.error !== undefined || result.status !== 0) {
            const reason = result.error?.message ?? `exit code ${result.status}`;
            throw new CompilerNotFoundError(`compiler ${JSON.stringify(this.command)} is not runnable: ${reason}`);
        }
    }
    run(args, stdin) {
        const result = spawnSync(this.command[0], [...this.command.slice(1), ...args], {
            input: stdin,
            env: this.env,
            timeout: this.timeoutMs,
            maxBuffer: MAX_BUFFER,
        });
        if (result.error !== undefined) {
            const code = result.error.code;
            if (code === "ETIMEDOUT" || result.signal === "SIGTERM") {
                throw new CompilerTimeoutError(`compiler call exceeded ${this.timeoutMs} ms`);
            }
            throw new CompilerProcessError(`failed to spawn compiler: ${result.error.message}`, null, "");
        }
        if (result.signal === "SIGTERM") {
            throw new CompilerTimeoutError(`compiler call exceeded ${this.timeoutMs} ms`);
        }
        const stderr = result.stderr.toString("utf-8");
        const diagnostics = parseDiagnosticStream(stderr);
        if (result.status === 1) {
            throw errorFromDiagnostics(diagnostics);
        }
        if (result.status !== 0) {
            throw new CompilerProcessError(`compiler exited with code ${result.status}`, result.status, stderr);
        }
        return { stdout: result.stdout, diagnostics };
    }
    static paramArgs(params) {
        const args = [];
        for (const [key, value] of Object.entries(params ?? {})) {
            args.push("-P", `${key}=${value}`);
        }
        return args;
    }
    /** Compile an OpenQASM 3 string; returns the .qem payload bytes
     *  (or the stage text as UTF-8 bytes for non-payload emits). */
    compileStr(qasm, options = {}) {
        const args = ["-", "--diagnostics", "json", "-o", "-"];
        const emit = options.emit ?? "payload";
        args.push("--emit", emit);
        const target = options.target ?? this.targetConfig;
        if (target !== undefined) {
            args.push("--target", target);
        }
        if (options.numShots !== undefined) {
            args.push("--num-shots", String(options.numShots));
        }
        if (options.jobs !== undefined) {
            args.push("--jobs", String(options.jobs));
        }
        args.push(...CompilerSession.paramArgs(options.params));
        return this.run(args, qasm).stdout;
    }
    /** Link new parameter values into compiled payload bytes. */
    linkBytes(qem, params) {
        const dir = mkdtempSync(join(tmpdir(), "qe-forge-link-"));
        const input = join(dir, "input.qem");
        try {
            writeFileSync(input, qem);
            const args = ["--link", input, "--diagnostics", "json", "-o", "-",
                ...CompilerSession.paramArgs(params)];
            return this.run(args).stdout;
        }
        finally {
            rmSync(dir, { recursive: true, force: true });
        }
    }
}
