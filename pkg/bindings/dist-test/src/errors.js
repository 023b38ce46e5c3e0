/** Base class for every error surfaced by the bindings. */
export class QeForgeError extends Error {
    diagnostics;
    line;
    col;
    constructor(message, diagnostics = []) {
        super(message);
        this.name = "QeForgeError";
        this.diagnostics = diagnostics;
        const first = diagnostics.find((d) => d.severity === "error");
        this.line = first?.line ?? null;
        this.col = first?.col ?? null;
    }
}
export class QasmParseError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "QasmParseError";
    }
}
export class UnsupportedInputError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "UnsupportedInputError";
    }
}
export class TypeMismatchError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "TypeMismatchError";
    }
}
export class UnknownSymbolError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "UnknownSymbolError";
    }
}
export class MissingCalibrationError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "MissingCalibrationError";
    }
}
export class ScheduleError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "ScheduleError";
    }
}
export class ConfigError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "ConfigError";
    }
}
export class LinkError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "LinkError";
    }
}
/** UnknownParameter from a link call; a LinkError with a stable name. */
export class UnknownParameterError extends LinkError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "UnknownParameterError";
    }
}
export class CorruptPayloadError extends LinkError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "CorruptPayloadError";
    }
}
export class InternalCompilerError extends QeForgeError {
    constructor(message, diagnostics = []) {
        super(message, diagnostics);
        this.name = "InternalCompilerError";
    }
}
/** The compiler executable could not be found or probed. */
export class CompilerNotFoundError extends QeForgeError {
    constructor(message) {
        super(message);
        this.name = "CompilerNotFoundError";
    }
}
/** The child process misbehaved outside the diagnostic protocol. */
export class CompilerProcessError extends QeForgeError {
    exitCode;
    stderr;
    constructor(message, exitCode, stderr) {
        super(message);
        this.name = "CompilerProcessError";
        this.exitCode = exitCode;
        this.stderr = stderr;
    }
}
export class CompilerTimeoutError extends QeForgeError {
    constructor(message) {
        super(message);
        this.name = "CompilerTimeoutError";
    }
}
const CATEGORY_ERRORS = {
    QASMParseFailure: QasmParseError,
    UnsupportedInput: UnsupportedInputError,
    TypeMismatch: TypeMismatchError,
    UnknownSymbol: UnknownSymbolError,
    MissingCalibration: MissingCalibrationError,
    ScheduleError: ScheduleError,
    ConfigError: ConfigError,
    LinkError: LinkError,
    InternalError: InternalCompilerError,
};
/** Build the typed error for a diagnostic stream (first error decides). */
export function errorFromDiagnostics(diagnostics) {
    const first = diagnostics.find((d) => d.severity === "error");
    if (first === undefined) {
        return new QeForgeError("compiler failed without an error diagnostic", diagnostics);
    }
    let ctor = CATEGORY_ERRORS[first.category] ?? QeForgeError;
    if (first.category === "LinkError") {
        if (first.message.includes("UnknownParameter")) {
            ctor = UnknownParameterError;
        }
        else if (first.message.includes("CorruptPayload")) {
            ctor = CorruptPayloadError;
        }
    }
    return new ctor(first.message, diagnostics);
}
export function parseDiagnosticStream(stderr) {
    const out = [];
    for (const line of stderr.split("\n")) {
        const trimmed = line.trim();
        if (!trimmed.startsWith("{")) {
            continue;
        }
        try {
            const record = JSON.parse(trimmed);
            if (typeof record.category === "string" &&
                typeof record.message === "string") {
                out.push(record);
            }
        }
        catch {
            // non-diagnostic stderr noise is ignored
        }
    }
    return out;
}
