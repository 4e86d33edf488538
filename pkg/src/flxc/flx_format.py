"""Textual fluxion form: emission and parsing of ``.flx`` documents.

Layout: one block per fluxion separated by a blank line. A block is a
header ``flx <id> [& <tags>] [{<ctx>}]``, one stream line per output stream
(``>> dest [msg]`` for start streams, ``-> dest [msg]`` for post streams,
``-> null`` when there are none), then the body indented two spaces.
Emission is deterministic: the same program always yields identical bytes.
"""

from __future__ import annotations

import re

from . import ast
from .errors import FlxLinkError, FlxSyntaxError
from .lexer import tokenize
from .parser import _Parser
from .pipeliner import POST, START, FluxionDef, FlxProgram, StreamDecl
from .printer import _function_text, emit_source

_HEADER = re.compile(
    r"^flx\s+(?P<id>[A-Za-z_$][\w$]*)"
    r"(?:\s*&\s*(?P<tags>[A-Za-z_$][\w$]*(?:\s*,\s*[A-Za-z_$][\w$]*)*))?"
    r"(?:\s*\{(?P<ctx>[^}]*)\})?\s*$"
)
_STREAM = re.compile(
    r"^(?P<arrow>>>|->)\s+(?P<dests>[A-Za-z_$][\w$]*(?:\s*,\s*[A-Za-z_$][\w$]*)*)"
    r"(?:\s*\[(?P<msg>[^\]]*)\])?\s*$"
)


def _body_text(fluxion: FluxionDef) -> str:
    body = fluxion.body
    if len(body) == 1 and isinstance(body[0], (ast.FunctionDecl, ast.FunctionExpr)):
        fn = body[0]
        return "  " + _function_text(fn.name, fn.params, fn.body, 1) + "\n"
    return "".join(emit_source(stmt, 1) for stmt in body)


def emit_flx(program: FlxProgram) -> str:
    blocks: list[str] = []
    for f in program.fluxions:
        header = f"flx {f.id}"
        if f.tags:
            header += " & " + ", ".join(f.tags)
        if f.context:
            header += " {" + ", ".join(f.context) + "}"
        lines = [header]
        if not f.streams:
            lines.append("-> null")
        else:
            for s in f.streams:
                arrow = ">>" if s.kind == START else "->"
                line = f"{arrow} {', '.join(s.dests)}"
                if s.msg:
                    line += " [" + ", ".join(s.msg) + "]"
                lines.append(line)
        blocks.append("\n".join(lines) + "\n" + _body_text(f))
    return "\n".join(blocks)


def _split_list(raw: str) -> list[str]:
    raw = raw.strip()
    if not raw:
        return []
    return [part.strip() for part in raw.split(",")]


def _parse_body(text: str, line_base: int) -> list[ast.Node]:
    """Body statements; a leading anonymous function is the whole body."""
    from .errors import ParseError

    try:
        stripped = text.lstrip()
        if stripped.startswith("function") and re.match(r"function\s*\(", stripped):
            parser = _Parser(tokenize(text, flx_mode=True), flx_mode=True)
            fn = parser.parse_function_expr()
            if parser.cur.kind != "eof":
                raise FlxSyntaxError("trailing content after body function", line_base)
            ast.renumber(fn)
            return [fn]
        parser = _Parser(tokenize(text, flx_mode=True), flx_mode=True)
        prog = parser.parse_program()
        ast.renumber(prog)
        return list(prog.body)
    except ParseError as exc:
        raise FlxSyntaxError(f"bad body: {exc.message}", line_base + exc.line - 1) from exc


def parse_flx(text: str) -> FlxProgram:
    lines = text.split("\n")
    fluxions: list[FluxionDef] = []
    i = 0
    n = len(lines)
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        m = _HEADER.match(lines[i])
        if m is None:
            raise FlxSyntaxError(f"expected fluxion header, got {lines[i]!r}", i + 1)
        fid = m.group("id")
        tags = _split_list(m.group("tags") or "")
        ctx = _split_list(m.group("ctx") or "")
        i += 1

        streams: list[StreamDecl] = []
        saw_null = False
        while i < n:
            line = lines[i]
            if line.strip() == "-> null":
                saw_null = True
                i += 1
                break
            sm = _STREAM.match(line)
            if sm is None:
                break
            streams.append(
                StreamDecl(
                    START if sm.group("arrow") == ">>" else POST,
                    _split_list(sm.group("dests")),
                    _split_list(sm.group("msg") or ""),
                )
            )
            i += 1
        if not streams and not saw_null:
            raise FlxSyntaxError(f"fluxion {fid!r} declares no streams (use '-> null')", i + 1)
        if saw_null and streams:
            raise FlxSyntaxError(f"fluxion {fid!r} mixes '-> null' with streams", i + 1)

        body_lines: list[str] = []
        body_base = i + 1
        while i < n:
            line = lines[i]
            if not line.strip():
                # a blank line ends the block when a new header follows
                j = i + 1
                while j < n and not lines[j].strip():
                    j += 1
                if j >= n or _HEADER.match(lines[j]):
                    i = j
                    break
                body_lines.append("")
                i += 1
                continue
            if not line.startswith("  "):
                raise FlxSyntaxError(f"body line must be indented two spaces: {line!r}", i + 1)
            body_lines.append(line[2:])
            i += 1

        body = _parse_body("\n".join(body_lines) + "\n", body_base)
        fluxions.append(FluxionDef(fid, tags, ctx, streams, body))

    if not fluxions:
        raise FlxSyntaxError("no fluxions in document", 1)

    ids = [f.id for f in fluxions]
    dupes = {x for x in ids if ids.count(x) > 1}
    if dupes:
        raise FlxSyntaxError(f"duplicate fluxion ids: {sorted(dupes)}", 1)

    known = set(ids)
    for f in fluxions:
        for s in f.streams:
            for d in s.dests:
                if d not in known:
                    raise FlxLinkError(f"fluxion {f.id!r} streams to unknown fluxion {d!r}")
        decl_keys = [(s.kind, tuple(s.dests)) for s in f.streams]
        for node in _iter_body_nodes(f):
            if isinstance(node, ast.StreamPlaceholder):
                key = (node.kind, tuple(node.dests))
                if decl_keys.count(key) != 1:
                    arrow = ">>" if node.kind == START else "->"
                    raise FlxLinkError(
                        f"placeholder '{arrow} {', '.join(node.dests)}' in {f.id!r} "
                        f"matches {decl_keys.count(key)} stream declarations"
                    )
        params = _root_params(f)
        overlap = set(f.context) & set(params)
        if overlap:
            raise FlxSyntaxError(
                f"fluxion {f.id!r}: context slots {sorted(overlap)} collide with parameters", 1
            )
    return FlxProgram(fluxions)


def _iter_body_nodes(f: FluxionDef):
    for stmt in f.body:
        yield from ast.walk(stmt)


def _root_params(f: FluxionDef) -> list[str]:
    if len(f.body) == 1 and isinstance(f.body[0], (ast.FunctionDecl, ast.FunctionExpr)):
        return list(f.body[0].params)
    return []


def flx_equal(a: FlxProgram, b: FlxProgram) -> bool:
    """Structural equality (bodies compared ignoring node ids and spans)."""
    if len(a.fluxions) != len(b.fluxions):
        return False
    for fa, fb in zip(a.fluxions, b.fluxions):
        if (fa.id, fa.tags, fa.context) != (fb.id, fb.tags, fb.context):
            return False
        if len(fa.streams) != len(fb.streams):
            return False
        for sa, sb in zip(fa.streams, fb.streams):
            if (sa.kind, sa.dests, sa.msg) != (sb.kind, sb.dests, sb.msg):
                return False
        if len(fa.body) != len(fb.body):
            return False
        if not all(ast.structurally_equal(x, y) for x, y in zip(fa.body, fb.body)):
            return False
    return True
