"""Batch command line: compile, run, interpret, serve.

Works on a workspace directory in the same layout the service persists, so
a directory of hand-written spec files is bootstrapped into a workspace on
first use. Exit codes: 0 success, 1 diagnostics or trap, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .pipeline import (
    DEFAULT_MAX_STEPS,
    DEFAULT_MAX_TRACE,
    SLOT_FILES,
    LoadError,
    StaleUpstream,
    Workspace,
    create_workspace,
    load_workspace,
    save_workspace,
)


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name, "").strip()
    return int(raw) if raw else default


def _open_workspace(directory: str) -> tuple[Workspace, Path]:
    path = Path(directory)
    if (path / "manifest.json").exists():
        return load_workspace(path), path
    if not path.is_dir():
        raise LoadError(f"{path} is not a directory")
    ws = create_workspace(path.name or "workspace")
    found = False
    for slot, filename in SLOT_FILES.items():
        slot_path = path / filename
        if slot_path.exists():
            ws.slots[slot] = slot_path.read_text(encoding="utf-8")
            found = True
    if not found:
        raise LoadError(
            f"{path} holds neither manifest.json nor any of: "
            + ", ".join(SLOT_FILES.values()))
    return ws, path


def _show_diag(diag: dict) -> str:
    if diag.get("line") is not None:
        where = f"{diag['line']}:{diag['col'] if diag.get('col') is not None else 0}: "
    else:
        where = ""
    return f"  {where}{diag['code']}: {diag['message']}"


def _print_report(report: dict) -> bool:
    for entry in report["subfases"]:
        print(f"{entry['name']}: {entry['status']}")
        for diag in entry.get("diagnostics", []):
            print(_show_diag(diag))
    return report["ok"]


def _cmd_compile(args) -> int:
    ws, path = _open_workspace(args.workspace)
    report = ws.compile()
    save_workspace(ws, path)
    return 0 if _print_report(report) else 1


def _cmd_run(args) -> int:
    ws, path = _open_workspace(args.workspace)
    try:
        source = Path(args.source).read_text(encoding="utf-8")
    except OSError as e:
        print(f"cannot read {args.source}: {e}", file=sys.stderr)
        return 2
    try:
        report = ws.run(source, optimize_flag=not args.no_optimize)
    except StaleUpstream as e:
        print(f"recompile first, {e}", file=sys.stderr)
        return 1
    save_workspace(ws, path)
    return 0 if _print_report(report) else 1


def _cmd_interpret(args) -> int:
    ws, path = _open_workspace(args.workspace)
    try:
        report = ws.interpret(args.input, max_steps=args.max_steps,
                              with_trace=args.trace, max_trace=args.max_trace)
    except StaleUpstream as e:
        print(f"run first, {e}", file=sys.stderr)
        return 1
    save_workspace(ws, path)
    print(report["output"], end="")
    if args.trace:
        for row in report["trace"]:
            print(json.dumps(row, ensure_ascii=False), file=sys.stderr)
    if report["trap"] is not None:
        print(f"trap: {report['trap']}: {report['trap_message']}",
              file=sys.stderr)
        return 1
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .pipeline import WorkspaceStore
    from .service import create_app

    store = WorkspaceStore(args.data)
    app = create_app(store, max_steps=args.max_steps, max_trace=args.max_trace,
                     static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tws",
        description="compile user-defined language specs into a working "
                    "compiler, run programs through it, and step the result")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="rebuild the four spec stages")
    p_compile.add_argument("-w", "--workspace", required=True,
                           help="workspace directory")
    p_compile.set_defaults(func=_cmd_compile)

    p_run = sub.add_parser("run", help="compile a source program to machine code")
    p_run.add_argument("-w", "--workspace", required=True)
    p_run.add_argument("-s", "--source", required=True, help="source program file")
    p_run.add_argument("--no-optimize", action="store_true",
                       help="keep the generated code unoptimized")
    p_run.set_defaults(func=_cmd_run)

    p_int = sub.add_parser("interpret", help="execute the compiled program")
    p_int.add_argument("-w", "--workspace", required=True)
    p_int.add_argument("--input", default="", help="whitespace-separated integers")
    p_int.add_argument("--trace", action="store_true",
                       help="print one JSON step record per line on stderr")
    p_int.add_argument("--max-steps", type=int,
                       default=_env_int("TWS_MAX_STEPS", DEFAULT_MAX_STEPS))
    p_int.add_argument("--max-trace", type=int,
                       default=_env_int("TWS_MAX_TRACE", DEFAULT_MAX_TRACE))
    p_int.set_defaults(func=_cmd_interpret)

    p_serve = sub.add_parser("serve", help="start the workspace HTTP service")
    p_serve.add_argument("--port", type=int,
                         default=_env_int("TWS_PORT", 8000))
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data", default=os.environ.get("TWS_DATA_DIR", "tws-data"))
    p_serve.add_argument("--static", default=os.environ.get("TWS_STATIC_DIR"))
    p_serve.add_argument("--max-steps", type=int,
                         default=_env_int("TWS_MAX_STEPS", DEFAULT_MAX_STEPS))
    p_serve.add_argument("--max-trace", type=int,
                         default=_env_int("TWS_MAX_TRACE", DEFAULT_MAX_TRACE))
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LoadError as e:
        print(str(e), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
