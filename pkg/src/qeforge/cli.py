"""Command-line entry point.

Compile:  qe-forge INPUT --target CFG [-o OUT.qem] [--emit STAGE]
          [--num-shots N] [--jobs N] [-P key=value] [--diagnostics MODE]
Link:     qe-forge --link IN.qem -P key=value [-o OUT.qem]

Exit codes: 0 success, 1 compile/link errors (diagnostics printed),
2 usage errors. Output files are written atomically (temp + rename).
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

from qeforge import payload as payload_mod
from qeforge.diagnostics import Category, error
from qeforge.manager import CompileOptions, compile_source
from qeforge.target import load_target_file


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qe-forge",
        description="Compile OpenQASM 3 programs into .qem control-system "
                    "payloads, or link new parameter values into one.")
    parser.add_argument("input", nargs="?",
                        help="OpenQASM source file, or '-' for stdin")
    parser.add_argument("--target", metavar="CFG",
                        help="target config file (required for payload "
                             "emission)")
    parser.add_argument("--emit", default="payload",
                        choices=("ast", "ir-initial", "ir-scheduled",
                                 "payload"))
    parser.add_argument("-o", "--output", metavar="PATH",
                        help="output path; default out.qem for payloads, "
                             "stdout for text ('-' forces stdout)")
    parser.add_argument("--num-shots", type=int, default=1000, metavar="N")
    parser.add_argument("--jobs", type=int, default=0, metavar="N",
                        help="phase-2 worker cap (default: one per "
                             "instrument)")
    parser.add_argument("-P", "--param", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="parameter override (repeatable)")
    parser.add_argument("--diagnostics", default="human",
                        choices=("human", "json"))
    parser.add_argument("--link", metavar="QEM",
                        help="link parameters into an existing payload "
                             "instead of compiling")
    return parser


def parse_params(pairs: list, parser: argparse.ArgumentParser) -> dict:
    import math
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            parser.error(f"-P expects KEY=VALUE, got {pair!r}")
        try:
            out[key] = float(value)
        except ValueError:
            parser.error(f"-P {key}: {value!r} is not a number")
        if not math.isfinite(out[key]):
            parser.error(f"-P {key}: value must be finite")
    return out


def print_diagnostics(diags, mode: str) -> None:
    for d in diags:
        line = d.render_json() if mode == "json" else d.render_human()
        print(line, file=sys.stderr)


def write_atomic(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qeforge-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit_output(data: bytes, path, binary: bool) -> None:
    if path is None or path == "-":
        if binary:
            sys.stdout.buffer.write(data)
            sys.stdout.buffer.flush()
        else:
            sys.stdout.write(data.decode("utf-8"))
        return
    write_atomic(path, data)


def run_link(args, params: dict, parser) -> int:
    try:
        with open(args.link, "rb") as fh:
            qem = fh.read()
    except OSError as exc:
        print_diagnostics([error(Category.LINK_ERROR,
                                 f"cannot read {args.link!r}: {exc}", None,
                                 "link")], args.diagnostics)
        return 1
    try:
        linked = payload_mod.link(qem, params)
    except payload_mod.PayloadError as exc:
        print_diagnostics([error(exc.category, str(exc), None, "link")],
                          args.diagnostics)
        return 1
    _emit_output(linked, args.output or "out.qem", binary=True)
    return 0


def main(argv=None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    params = parse_params(args.param, parser)

    if args.link is not None:
        if args.input is not None:
            parser.error("--link takes no input source")
        return run_link(args, params, parser)

    if args.input is None:
        parser.error("an input file is required (or '-' for stdin)")
    if args.emit == "payload" and not args.target:
        parser.error("--emit payload requires --target")
    if args.num_shots < 1:
        parser.error("--num-shots must be at least 1")
    if args.jobs < 0:
        parser.error("--jobs must be non-negative")

    if args.input == "-":
        source = sys.stdin.read()
    else:
        try:
            with open(args.input, "r", encoding="utf-8",
                      errors="replace") as fh:
                source = fh.read()
        except OSError as exc:
            print_diagnostics([error(Category.CONFIG_ERROR,
                                     f"cannot read {args.input!r}: {exc}",
                                     None, "cli")], args.diagnostics)
            return 1

    root, cals, target_diags = None, None, []
    if args.target:
        root, cals, target_diags = load_target_file(args.target)
        if root is None:
            print_diagnostics(target_diags, args.diagnostics)
            return 1

    opts = CompileOptions(jobs=args.jobs, emit=args.emit,
                          num_shots=args.num_shots,
                          parameter_overrides=params)
    result = compile_source(source, root, cals, opts)
    print_diagnostics(target_diags + result.diagnostics, args.diagnostics)
    if not result.ok:
        return 1
    if result.payload is not None:
        _emit_output(result.payload, args.output or "out.qem", binary=True)
    elif result.text is not None:
        _emit_output(result.text.encode("utf-8"), args.output, binary=False)
    return 0


if __name__ == "__main__":
    sys.exit(main())
