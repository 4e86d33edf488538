"""Rupture-point detection and pipeline extraction.

A rupture point is a call to a loosely coupled asynchronous callee taken
from a configurable list. Listener registrations open ``start`` streams,
continuations after one-shot asynchronous operations open ``post`` streams.
Each resolved callback becomes its own pipeline stage; callbacks that only
evaluate to functions at runtime are recorded as unresolvable and ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import ast
from .errors import CompileError, CyclicPipeline, DuplicateCallbackUse
from .scopes import ScopeGraph

START = "start"
POST = "post"
LAST = "last"


@dataclass(frozen=True)
class AsyncCallee:
    pattern: str
    callback_arg_index: int | str  # 0-based index or LAST
    kind: str  # START or POST


def default_async_callees() -> list[AsyncCallee]:
    """Built-in listener and continuation callees; extensible per program."""
    return [
        AsyncCallee("app.get", LAST, START),
        AsyncCallee("app.post", LAST, START),
        AsyncCallee("app.listen", LAST, START),
        AsyncCallee("fs.readFile", LAST, POST),
        AsyncCallee("timer.delay", LAST, POST),
        AsyncCallee("getRawBody", LAST, START),
    ]


def load_async_callees(path: str) -> list[AsyncCallee]:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    out = []
    for entry in raw:
        idx = entry["callbackArgIndex"]
        if not (idx == LAST or isinstance(idx, int)):
            raise ValueError(f"bad callbackArgIndex: {idx!r}")
        kind = entry["kind"]
        if kind not in (START, POST):
            raise ValueError(f"bad kind: {kind!r}")
        out.append(AsyncCallee(entry["pattern"], idx, kind))
    return out


@dataclass(eq=False)
class Resolved:
    function: ast.Node  # FunctionDecl or FunctionExpr
    # where the function value stood: the call argument itself ('in-situ')
    # or the declaration/assignment found by walking back ('walk-back')
    site: ast.Node
    via: str  # 'in-situ' | 'walk-back'


@dataclass(eq=False)
class Unresolvable:
    reason: str


@dataclass(eq=False)
class RupturePoint:
    call_site: ast.Call
    kind: str
    callee_path: str
    arg_index: int | None
    callback: Resolved | Unresolvable


def dotted_path(node: ast.Node) -> str | None:
    """``a.b.c`` as a string, or None when the callee is not a plain chain."""
    parts: list[str] = []
    cur = node
    while isinstance(cur, ast.Member):
        parts.append(cur.prop)
        cur = cur.obj
    if not isinstance(cur, ast.Identifier):
        return None
    parts.append(cur.name)
    return ".".join(reversed(parts))


def _pattern_matches(pattern: str, path: str) -> bool:
    pseg = pattern.split(".")
    seg = path.split(".")
    if len(pseg) != len(seg):
        return False
    return all(p == "*" or p == s for p, s in zip(pseg, seg))


def match_async_callee(path: str, callees: list[AsyncCallee]) -> AsyncCallee | None:
    """First match in list order; later entries never override earlier ones."""
    for entry in callees:
        if _pattern_matches(entry.pattern, path):
            return entry
    return None


def resolve_callback(call: ast.Call, arg_index: int, graph: ScopeGraph) -> Resolved | Unresolvable:
    """Resolve a callback argument to a statically known function.

    In-situ function expressions resolve trivially. Identifiers resolve by
    walking back over declarations and ``=`` assignments that precede the
    call site in source order and taking the last one whose right-hand side
    is statically a function. Calls and member expressions only evaluate to
    functions at runtime and stay unresolvable.
    """
    if arg_index >= len(call.args):
        return Unresolvable("missing callback argument")
    arg = call.args[arg_index]
    if isinstance(arg, (ast.FunctionExpr, ast.FunctionDecl)):
        return Resolved(arg, site=arg, via="in-situ")
    if isinstance(arg, (ast.Call, ast.Member)):
        return Unresolvable("argument evaluates to a function only at runtime")
    if isinstance(arg, ast.Identifier):
        binding = None
        for access in graph.accesses:
            if access.node is arg:
                binding = access.binding
                break
        if binding is None:
            return Unresolvable(f"unresolved identifier {arg.name!r}")
        if binding.kind == "param":
            return Unresolvable("argument is a parameter bound at runtime")

        sites: list[tuple[int, ast.Node, ast.Node]] = []  # (pos, site, value)
        if isinstance(binding.decl_node, ast.FunctionDecl):
            sites.append((binding.decl_node.span.start, binding.decl_node, binding.decl_node))
        elif isinstance(binding.decl_node, ast.VarDecl) and binding.decl_node.init is not None:
            sites.append((binding.decl_node.span.start, binding.decl_node, binding.decl_node.init))
        for access in graph.accesses:
            if access.binding is binding and access.kind == "write":
                assign = graph.parents.get(access.node)
                if isinstance(assign, ast.Assign) and assign.op == "=" and assign.target is access.node:
                    sites.append((assign.span.start, assign, assign.value))
        dominating = [s for s in sites if s[0] < call.span.start]
        if not dominating:
            return Unresolvable("no dominating assignment determines the callback")
        _, site, value = max(dominating, key=lambda s: s[0])
        if isinstance(value, (ast.FunctionExpr, ast.FunctionDecl)):
            return Resolved(value, site=site, via="walk-back")
        return Unresolvable("last assigned value is not statically a function")
    return Unresolvable("argument is not a function")


def detect_rupture_points(
    program: ast.Program, graph: ScopeGraph, callees: list[AsyncCallee]
) -> list[RupturePoint]:
    """One rupture point per matching call expression, in source order."""
    if not callees:
        raise ValueError("async callee list must not be empty")
    points: list[RupturePoint] = []
    for node in ast.walk(program):
        if not isinstance(node, ast.Call):
            continue
        path = dotted_path(node.callee)
        if path is None:
            continue
        entry = match_async_callee(path, callees)
        if entry is None:
            continue
        if not node.args:
            continue  # no possible callback argument
        arg_index = len(node.args) - 1 if entry.callback_arg_index == LAST else entry.callback_arg_index
        if arg_index >= len(node.args):
            continue
        arg = node.args[arg_index]
        if isinstance(arg, (ast.NumberLit, ast.StringLit, ast.BoolLit, ast.NullLit, ast.ObjectLit)):
            continue  # statically never a function: not a rupture point
        callback = resolve_callback(node, arg_index, graph)
        points.append(RupturePoint(node, entry.kind, path, arg_index, callback))
    points.sort(key=lambda p: p.call_site.span.start)
    return points


MAIN_STAGE = "main"


@dataclass(eq=False)
class Stage:
    id: int
    root: ast.Node  # Program for the main stage, the callback function otherwise
    rupture: RupturePoint | None  # incoming rupture, None for main

    @property
    def is_main(self) -> bool:
        return isinstance(self.root, ast.Program)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Stage({self.id})"


@dataclass(eq=False)
class Edge:
    src: Stage
    dst: Stage
    kind: str
    rupture: RupturePoint


@dataclass(eq=False)
class PostChain:
    start_edge: Edge
    stages: list[Stage]


@dataclass(eq=False)
class PipelineRepr:
    program: ast.Program
    graph: ScopeGraph
    stages: list[Stage]
    edges: list[Edge]
    post_chains: list[PostChain]
    ruptures: list[RupturePoint]
    _stage_by_root: dict[ast.Node, Stage] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._stage_by_root = {s.root: s for s in self.stages}

    @property
    def main(self) -> Stage:
        return self.stages[0]

    def stage_of(self, node: ast.Node) -> Stage:
        """The stage owning ``node``: the nearest enclosing stage root."""
        cur: ast.Node | None = node
        while cur is not None:
            if cur in self._stage_by_root:
                return self._stage_by_root[cur]
            cur = self.graph.parents.get(cur)
        return self.main

    def incoming(self, stage: Stage) -> Edge | None:
        for e in self.edges:
            if e.dst is stage:
                return e
        return None

    def is_downstream(self, a: Stage, b: Stage) -> bool:
        """True when ``b`` is strictly downstream of ``a``."""
        cur = b
        while True:
            edge = self.incoming(cur)
            if edge is None:
                return False
            cur = edge.src
            if cur is a:
                return True

    def path_edges(self, a: Stage, b: Stage) -> list[Edge]:
        """Edges on the unique path from ``a`` down to ``b``."""
        path: list[Edge] = []
        cur = b
        while cur is not a:
            edge = self.incoming(cur)
            if edge is None:
                raise ValueError("no path: stages are not on one chain")
            path.append(edge)
            cur = edge.src
        path.reverse()
        return path

    def chain_of(self, stage: Stage) -> PostChain | None:
        for chain in self.post_chains:
            if stage in chain.stages:
                return chain
        return None

    def start_edge_between(self, upstream: Stage, downstream: Stage) -> bool:
        """True when the path from upstream to downstream crosses a start edge."""
        if upstream is downstream:
            return False
        if not self.is_downstream(upstream, downstream):
            return False
        return any(e.kind == START for e in self.path_edges(upstream, downstream))

    def stage_members(self, stage: Stage) -> list[int]:
        return sorted(n.node_id for n in ast.walk(self.program) if self.stage_of(n) is stage)


def build_pipeline(
    program: ast.Program, ruptures: list[RupturePoint], graph: ScopeGraph
) -> PipelineRepr:
    main = Stage(0, program, None)
    stages = [main]
    seen_callbacks: dict[ast.Node, RupturePoint] = {}
    for rupture in ruptures:
        if not isinstance(rupture.callback, Resolved):
            continue
        fn = rupture.callback.function
        if fn in seen_callbacks:
            raise DuplicateCallbackUse(
                f"function at {fn.span.line}:{fn.span.col} is the callback of two rupture points"
            )
        seen_callbacks[fn] = rupture
        stages.append(Stage(len(stages), fn, rupture))

    pipeline = PipelineRepr(program, graph, stages, [], [], ruptures)

    edges: list[Edge] = []
    for stage in stages[1:]:
        rupture = stage.rupture
        assert rupture is not None
        src = pipeline.stage_of(rupture.call_site)
        edges.append(Edge(src, stage, rupture.kind, rupture))
    pipeline.edges = edges

    # each stage has at most one incoming edge, so any cycle must revisit a
    # stage while walking incoming edges upward
    for stage in stages[1:]:
        seen = {stage}
        cur = stage
        while True:
            edge = pipeline.incoming(cur)
            if edge is None:
                break
            cur = edge.src
            if cur in seen:
                raise CyclicPipeline(
                    f"stage rooted at {cur.root.span.line}:{cur.root.span.col} is reachable from itself"
                )
            seen.add(cur)

    chains: list[PostChain] = []
    for edge in edges:
        if edge.kind != START:
            continue
        members = [edge.dst]
        frontier = [edge.dst]
        while frontier:
            s = frontier.pop()
            for e in edges:
                if e.src is s and e.kind == POST and e.dst not in members:
                    members.append(e.dst)
                    frontier.append(e.dst)
        chains.append(PostChain(edge, members))
    pipeline.post_chains = chains
    return pipeline


def analyze(
    program: ast.Program, graph: ScopeGraph, callees: list[AsyncCallee] | None = None
) -> PipelineRepr:
    callees = callees if callees is not None else default_async_callees()
    ruptures = detect_rupture_points(program, graph, callees)
    return build_pipeline(program, ruptures, graph)


def pipeline_json(pipeline: PipelineRepr) -> dict:
    def stage_doc(stage: Stage) -> dict:
        name = None
        if isinstance(stage.root, (ast.FunctionDecl, ast.FunctionExpr)):
            name = stage.root.name
        return {
            "id": stage.id,
            "kind": "main" if stage.is_main else "callback",
            "function": name,
            "rootNode": stage.root.node_id,
        }

    return {
        "edges": [
            {
                "callee": e.rupture.callee_path,
                "from": e.src.id,
                "kind": e.kind,
                "to": e.dst.id,
            }
            for e in pipeline.edges
        ],
        "ignored": [
            {
                "callee": r.callee_path,
                "kind": r.kind,
                "reason": r.callback.reason,
            }
            for r in pipeline.ruptures
            if isinstance(r.callback, Unresolvable)
        ],
        "stages": [stage_doc(s) for s in pipeline.stages],
    }
