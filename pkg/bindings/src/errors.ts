/** One line-delimited JSON record from the compiler's diagnostic stream. */
export interface Diagnostic {
  severity: "error" | "warning" | "info";
  category: string;
  message: string;
  line: number | null;
  col: number | null;
  phase: string;
}

/** Base class for every error surfaced by the bindings. */
export class QeForgeError extends Error {
  readonly diagnostics: Diagnostic[];
  readonly line: number | null;
  readonly col: number | null;

  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message);
    this.name = "QeForgeError";
    this.diagnostics = diagnostics;
    const first = diagnostics.find((d) => d.severity === "error");
    this.line = first?.line ?? null;
    this.col = first?.col ?? null;
  }
}

export class QasmParseError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "QasmParseError";
  }
}

export class UnsupportedInputError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "UnsupportedInputError";
  }
}

export class TypeMismatchError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "TypeMismatchError";
  }
}

export class UnknownSymbolError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "UnknownSymbolError";
  }
}

export class MissingCalibrationError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "MissingCalibrationError";
  }
}

export class ScheduleError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "ScheduleError";
  }
}

export class ConfigError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "ConfigError";
  }
}

export class LinkError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "LinkError";
  }
}

/** UnknownParameter from a link call; a LinkError with a stable name. */
export class UnknownParameterError extends LinkError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "UnknownParameterError";
  }
}

export class CorruptPayloadError extends LinkError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "CorruptPayloadError";
  }
}

export class InternalCompilerError extends QeForgeError {
  constructor(message: string, diagnostics: Diagnostic[] = []) {
    super(message, diagnostics);
    this.name = "InternalCompilerError";
  }
}

/** The compiler executable could not be found or probed. */
export class CompilerNotFoundError extends QeForgeError {
  constructor(message: string) {
    super(message);
    this.name = "CompilerNotFoundError";
  }
}

/** The child process misbehaved outside the diagnostic protocol. */
export class CompilerProcessError extends QeForgeError {
  readonly exitCode: number | null;
  readonly stderr: string;

  constructor(message: string, exitCode: number | null, stderr: string) {
    super(message);
    this.name = "CompilerProcessError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

export class CompilerTimeoutError extends QeForgeError {
  constructor(message: string) {
    super(message);
    this.name = "CompilerTimeoutError";
  }
}

type ErrorCtor = new (message: string, diagnostics: Diagnostic[]) => QeForgeError;

const CATEGORY_ERRORS: Record<string, ErrorCtor> = {
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
export function errorFromDiagnostics(diagnostics: Diagnostic[]): QeForgeError {
  const first = diagnostics.find((d) => d.severity === "error");
  if (first === undefined) {
    return new QeForgeError("compiler failed without an error diagnostic",
      diagnostics);
  }
  let ctor = CATEGORY_ERRORS[first.category] ?? QeForgeError;
  if (first.category === "LinkError") {
    if (first.message.includes("UnknownParameter")) {
      ctor = UnknownParameterError;
    } else if (first.message.includes("CorruptPayload")) {
      ctor = CorruptPayloadError;
    }
  }
  return new ctor(first.message, diagnostics);
}

export function parseDiagnosticStream(stderr: string): Diagnostic[] {
  const out: Diagnostic[] = [];
  for (const line of stderr.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed.startsWith("{")) {
      continue;
    }
    try {
      const record = JSON.parse(trimmed);
      if (typeof record.category === "string" &&
          typeof record.message === "string") {
        out.push(record as Diagnostic);
      }
    } catch {
      // non-diagnostic stderr noise is ignored
    }
  }
  return out;
}
