export { CompilerSession } from "./session.js";
export type { CompileCallOptions, SessionOptions } from "./session.js";
export {
  CompilerNotFoundError,
  CompilerProcessError,
  CompilerTimeoutError,
  ConfigError,
  CorruptPayloadError,
  InternalCompilerError,
  LinkError,
  MissingCalibrationError,
  QasmParseError,
  QeForgeError,
  ScheduleError,
  TypeMismatchError,
  UnknownParameterError,
  UnknownSymbolError,
  UnsupportedInputError,
  errorFromDiagnostics,
  parseDiagnosticStream,
} from "./errors.js";
export type { Diagnostic } from "./errors.js";
