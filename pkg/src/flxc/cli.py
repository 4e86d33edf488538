"""``flxc`` command line: compile, analyze, scopes, run, run-ref, check.

Every subcommand accepts ``--json`` for machine output; the default is a
short human-readable rendering. ``FLXC_WORKERS`` sets the default worker
count. Exit codes for ``check``: 0 equivalent, 1 mismatch, 2 compile (or
input) error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .analyzer import analyze, default_async_callees, load_async_callees, pipeline_json
from .check import jsonable, run_check
from .errors import FlxError, LexError, ParseError, CompileError, FlxLinkError, FlxSyntaxError
from .flx_format import emit_flx, parse_flx
from .parser import parse
from .pipeliner import compile_program, placement_report
from .reference import run_sequential
from .runtime import register
from .scopes import build_scope_graph, scope_graph_json

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_COMPILE = 2
EXIT_RUNTIME = 3

_COMPILE_ERRORS = (LexError, ParseError, CompileError, FlxSyntaxError, FlxLinkError, OSError)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_workload(path: str | None) -> list[dict]:
    if path is None:
        return []
    data = json.loads(_read(path))
    if not isinstance(data, list):
        raise ValueError("request file must be a JSON array of {path, body}")
    return data


def _callees(args: argparse.Namespace):
    if getattr(args, "async_list", None):
        return load_async_callees(args.async_list)
    return default_async_callees()


def _emit(args: argparse.Namespace, doc: dict, human: str) -> None:
    if args.json:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        sys.stdout.write(human)


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("FLXC_WORKERS", "1")))
    except ValueError:
        return 1


def cmd_compile(args: argparse.Namespace) -> int:
    result = compile_program(parse(_read(args.source)), _callees(args))
    text = emit_flx(result.flx)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(placement_report(result), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.verbose and args.output:
        ids = ", ".join(f.id for f in result.flx.fluxions)
        sys.stderr.write(f"compiled {len(result.flx.fluxions)} fluxions: {ids}\n")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    program = parse(_read(args.source))
    pipeline = analyze(program, build_scope_graph(program), _callees(args))
    doc = pipeline_json(pipeline)
    lines = ["stages:"]
    for s in doc["stages"]:
        lines.append(f"  #{s['id']} {s['kind']}" + (f" function={s['function']}" if s["function"] else ""))
    lines.append("edges:")
    for e in doc["edges"]:
        arrow = ">>" if e["kind"] == "start" else "->"
        lines.append(f"  #{e['from']} {arrow} #{e['to']} via {e['callee']}")
    for ig in doc["ignored"]:
        lines.append(f"ignored: {ig['callee']} ({ig['reason']})")
    _emit(args, doc, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_scopes(args: argparse.Namespace) -> int:
    graph = build_scope_graph(parse(_read(args.source)))
    doc = scope_graph_json(graph)
    lines = [f"scopes: {len(doc['scopes'])}  bindings: {len(doc['bindings'])}  accesses: {len(doc['accesses'])}"]
    for b in doc["bindings"]:
        uses = [a for a in doc["accesses"] if a["binding"] == b["id"]]
        lines.append(f"  {b['name']} (scope {b['scope']}, {b['kind']}): {len(uses)} accesses")
    if doc["unresolved"]:
        names = sorted({u["name"] for u in doc["unresolved"]})
        lines.append("unresolved (ambient): " + ", ".join(names))
    _emit(args, doc, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    program = parse_flx(_read(args.program))
    state = register(program, workers=args.workers, replicate=args.replicate)
    for request in _load_workload(args.requests):
        state.inject_request(request["path"], request.get("body"))
    metrics = state.run_until_idle(deadline=args.deadline)
    if args.trace:
        state.write_trace(args.trace)
    doc = {
        "contexts": jsonable(metrics.contexts),
        "deadLetters": metrics.dead_letters,
        "invocations": metrics.invocations,
        "responses": [[o, jsonable(v)] for o, v in metrics.responses],
        "wallMs": round(metrics.wall_time * 1000, 3),
    }
    human = (
        f"ran {sum(metrics.invocations.values())} invocations on {args.workers} workers "
        f"in {doc['wallMs']} ms; {len(metrics.responses)} responses, "
        f"{len(metrics.dead_letters)} dead letters\n"
    )
    _emit(args, doc, human)
    return EXIT_OK


def cmd_run_ref(args: argparse.Namespace) -> int:
    outputs = run_sequential(parse(_read(args.program)), _load_workload(args.requests))
    doc = {
        "finalGlobals": jsonable(outputs.final_globals),
        "responses": [[o, jsonable(v)] for o, v in outputs.responses],
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    human = f"{len(outputs.responses)} responses; globals: {json.dumps(jsonable(outputs.final_globals), sort_keys=True)}\n"
    _emit(args, doc, human)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    report = run_check(
        _read(args.source),
        _load_workload(args.requests),
        workers=args.workers,
        callees=_callees(args),
        replicate=args.replicate,
        deadline=args.deadline,
    )
    doc = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    status = "equivalent" if report.equivalent else f"{len(report.mismatches)} mismatching origins"
    human = (
        f"check: {status} ({report.requests} requests, {report.workers} workers)\n"
        f"timings: compile {report.timings['compileMs']} ms, "
        f"reference {report.timings['referenceMs']} ms, runtime {report.timings['runtimeMs']} ms\n"
    )
    if not args.out or args.json:
        _emit(args, doc, human)
    else:
        sys.stdout.write(human)
    return EXIT_OK if report.equivalent else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flxc", description="fluxional compiler and runtime")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, async_list: bool = True) -> None:
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--verbose", action="store_true")
        if async_list:
            p.add_argument("--async-list", metavar="FILE", help="JSON list of async callees")

    p = sub.add_parser("compile", help="compile a source program to fluxional form")
    p.add_argument("source")
    p.add_argument("-o", "--output", metavar="FILE")
    p.add_argument("--report", metavar="FILE", help="write the placement report")
    common(p)
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("analyze", help="print the stage/stream pipeline")
    p.add_argument("source")
    common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("scopes", help="dump the memory-scope graph")
    p.add_argument("source")
    common(p, async_list=False)
    p.set_defaults(fn=cmd_scopes)

    p = sub.add_parser("run", help="execute a compiled program")
    p.add_argument("program")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--requests", metavar="FILE")
    p.add_argument("--trace", metavar="FILE", help="write newline-delimited JSON events")
    p.add_argument("--replicate", action="store_true")
    p.add_argument("--deadline", type=float, default=30.0)
    common(p, async_list=False)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("run-ref", help="execute the source under the sequential oracle")
    p.add_argument("program")
    p.add_argument("--requests", metavar="FILE")
    p.add_argument("--out", metavar="FILE")
    common(p, async_list=False)
    p.set_defaults(fn=cmd_run_ref)

    p = sub.add_parser("check", help="compile, run both executions, and diff")
    p.add_argument("source")
    p.add_argument("--requests", metavar="FILE")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--replicate", action="store_true")
    p.add_argument("--deadline", type=float, default=30.0)
    p.add_argument("--out", metavar="FILE")
    common(p)
    p.set_defaults(fn=cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _COMPILE_ERRORS as exc:
        sys.stderr.write(f"flxc: {exc}\n")
        return EXIT_COMPILE
    except FlxError as exc:
        sys.stderr.write(f"flxc: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
