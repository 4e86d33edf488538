"""Variable placement and fluxion construction.

A rupture point breaks the chain of scopes between the caller and its
callback. For every binding that crosses (or persists across) stage
boundaries the pipeliner picks one of three placements:

* scope  - the variable lives in the context of the single stage using it;
* stream - the value rides the message streams from its defining stage to
           the stages reading it (safe when the value is per-message, or
           frozen after the program's initialization);
* share  - the stages touching the variable are grouped under one tag and
           the variable becomes a context slot synchronized within the
           group, which pins those stages to one event loop.

Bindings aliasing runtime modules (``var fs = require('fs')``), plain
function definitions, and parameters used only inside their own stage need
no placement at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .analyzer import (
    POST,
    START,
    AsyncCallee,
    Edge,
    PipelineRepr,
    Resolved,
    Stage,
    analyze,
)
from .errors import NameCollision, UnsupportedClosureTransfer
from .parser import parse
from .scopes import READ, READWRITE, WRITE, Access, Binding, ScopeGraph, build_scope_graph

SCOPE = "scope"
STREAM = "stream"
SHARE = "share"
NONE = "none"


@dataclass(eq=False)
class Placement:
    binding: Binding
    variant: str  # SCOPE | STREAM | SHARE | NONE
    rule: str  # human-readable justification
    stage: Stage | None = None  # SCOPE: owning stage
    origin: Stage | None = None  # STREAM/SHARE: stage the value flows from
    edges: list[Edge] = field(default_factory=list)  # STREAM/handle-SHARE carriers
    members: list[Stage] = field(default_factory=list)  # SHARE members
    tag: str | None = None  # SHARE: filled by assign_groups
    carried_by_stream: bool = False  # SHARE of a per-request handle
    slot_stages: list[Stage] = field(default_factory=list)  # stages holding a ctx slot


# --- exclusion helpers ----------------------------------------------------


def _value_sites(binding: Binding, graph: ScopeGraph) -> list[ast.Node]:
    """Right-hand sides that can define the binding's value."""
    sites: list[ast.Node] = []
    decl = binding.decl_node
    if isinstance(decl, ast.FunctionDecl):
        sites.append(decl)
    elif isinstance(decl, ast.VarDecl) and decl.init is not None:
        sites.append(decl.init)
    for access in graph.accesses:
        if access.binding is binding and access.kind == WRITE:
            assign = graph.parents.get(access.node)
            if isinstance(assign, ast.Assign) and assign.target is access.node:
                sites.append(assign.value)
    return sites


def _is_require_chain(node: ast.Node) -> bool:
    """``require('m')`` or any call chain rooted at it, e.g. ``require('m')()``."""
    while isinstance(node, ast.Call):
        callee = node.callee
        if isinstance(callee, ast.Identifier) and callee.name == "require":
            return True
        node = callee
    return False


def _is_module_alias(binding: Binding, graph: ScopeGraph) -> bool:
    sites = _value_sites(binding, graph)
    if not sites:
        return False
    has_rw = any(
        a.kind == READWRITE for a in graph.accesses if a.binding is binding
    )
    return not has_rw and all(_is_require_chain(s) for s in sites)


def _is_function_valued(binding: Binding, graph: ScopeGraph) -> bool:
    sites = _value_sites(binding, graph)
    if not sites:
        return False
    return all(isinstance(s, (ast.FunctionExpr, ast.FunctionDecl)) for s in sites)


def _effect_stages(accesses: list[Access], pipeline: PipelineRepr) -> set[Stage]:
    """Stages where the binding receives property writes or method calls."""
    graph = pipeline.graph
    out: set[Stage] = set()
    for access in accesses:
        parent = graph.parents.get(access.node)
        if not isinstance(parent, ast.Member):
            continue
        if access.kind == READWRITE:  # property write recorded by scope analysis
            out.add(pipeline.stage_of(access.node))
            continue
        top = parent
        while isinstance(graph.parents.get(top), ast.Member):
            top = graph.parents.get(top)
        call = graph.parents.get(top)
        if isinstance(call, ast.Call) and call.callee is top:
            out.add(pipeline.stage_of(access.node))
    return out


def _carrier_edges(pipeline: PipelineRepr, origin: Stage, targets: set[Stage]) -> list[Edge]:
    seen: list[Edge] = []
    for t in sorted(targets, key=lambda s: s.id):
        if t is origin:
            continue
        for e in pipeline.path_edges(origin, t):
            if e not in seen:
                seen.append(e)
    return seen


# --- classification -------------------------------------------------------


def classify_variable(
    binding: Binding, pipeline: PipelineRepr, graph: ScopeGraph, consumed: set[ast.Node] | None = None
) -> Placement:
    """Decide the placement of one binding.

    Decision order: context-only usage stays in scope; values flowing only
    toward downstream stages (per-message values, or globals frozen after
    initialization) are streamed; everything else - writes visible across
    stages, reads that can observe an upstream stage's later write - must be
    shared under one tag. A variable declared upstream of a start edge but
    written downstream persists across requests, so it is never scope-eligible.
    """
    consumed = consumed or set()
    accesses = [
        a for a in graph.accesses if a.binding is binding and a.node not in consumed
    ]
    if not accesses:
        return Placement(binding, NONE, "unused or only consumed as a rupture callback")

    stage_of = pipeline.stage_of
    acc_stages = {stage_of(a.node) for a in accesses}
    write_stages = {stage_of(a.node) for a in accesses if a.kind in (WRITE, READWRITE)}

    decl_is_param = binding.kind == "param"
    if decl_is_param:
        decl_stage = stage_of(binding.decl_node)
    else:
        decl_stage = stage_of(binding.decl_node)
    has_init = binding.has_init and not decl_is_param

    # parameters and nested-function locals used only inside their own stage
    # are plain frame variables: messages or the frame already deliver them
    root_local = (not decl_is_param) and binding.scope.owner in (
        s.root for s in pipeline.stages
    )
    if acc_stages == {decl_stage}:
        if decl_is_param or not root_local:
            return Placement(binding, NONE, "frame-local: used only inside its own stage")

    # per-request handles: parameters of a start-edge callback with property
    # effects in a downstream stage synchronize the bordering stage with the
    # effect stages, but their per-request value still rides the streams
    if decl_is_param and binding.decl_node in (s.root for s in pipeline.stages):
        param_stage = next(s for s in pipeline.stages if s.root is binding.decl_node)
        incoming = pipeline.incoming(param_stage)
        if incoming is not None and incoming.kind == START and acc_stages != {param_stage}:
            effects = _effect_stages(accesses, pipeline)
            if effects - {param_stage}:
                origin = incoming.src
                members = sorted({origin, *effects}, key=lambda s: s.id)
                edges = _carrier_edges(pipeline, origin, acc_stages | effects)
                return Placement(
                    binding,
                    SHARE,
                    "request handle with effects past its callback: group the "
                    "border stage with the effect stages, value rides the streams",
                    origin=origin,
                    edges=edges,
                    members=members,
                    carried_by_stream=True,
                )

    if not write_stages:
        if acc_stages == {decl_stage}:
            return Placement(binding, SCOPE, "read-only and local to one stage", stage=decl_stage)
        if all(s is decl_stage or pipeline.is_downstream(decl_stage, s) for s in acc_stages):
            edges = _carrier_edges(pipeline, decl_stage, acc_stages)
            return Placement(
                binding,
                STREAM,
                "never written: the defining stage streams the value downstream",
                origin=decl_stage,
                edges=edges,
            )
        return Placement(
            binding,
            SHARE,
            "read across unrelated stages",
            members=sorted(acc_stages | ({decl_stage} if has_init else set()), key=lambda s: s.id),
        )

    if len(acc_stages) == 1:
        (stage,) = acc_stages
        if stage is decl_stage:
            return Placement(binding, SCOPE, "modified inside a single stage", stage=stage)
        if pipeline.start_edge_between(decl_stage, stage):
            members = sorted({stage} | ({decl_stage} if has_init else set()), key=lambda s: s.id)
            return Placement(
                binding,
                SHARE,
                "declared upstream of a start edge but written downstream: the "
                "value outlives one request, the declaring stage seeds it",
                members=members,
            )
        if has_init:
            return Placement(
                binding,
                SHARE,
                "initialized in an upstream stage of the same chain: the "
                "declaring stage must seed the slot",
                members=sorted({stage, decl_stage}, key=lambda s: s.id),
            )
        return Placement(
            binding,
            SCOPE,
            "declared upstream in the same post chain, used by one stage",
            stage=stage,
        )

    chain = pipeline.chain_of(decl_stage)
    in_chain = chain is not None and acc_stages <= set(chain.stages)
    if in_chain:
        edges = _carrier_edges(pipeline, decl_stage, acc_stages)
        return Placement(
            binding,
            STREAM,
            "defined inside a post chain and used only within it: per-message "
            "ordering lets it stream regardless of write/read order",
            origin=decl_stage,
            edges=edges,
        )
    if write_stages <= {decl_stage} and decl_stage.is_main:
        if all(s is decl_stage or pipeline.is_downstream(decl_stage, s) for s in acc_stages):
            edges = _carrier_edges(pipeline, decl_stage, acc_stages)
            return Placement(
                binding,
                STREAM,
                "written only during initialization: the frozen value streams "
                "to downstream readers",
                origin=decl_stage,
                edges=edges,
            )
    return Placement(
        binding,
        SHARE,
        "modified by several stages or readable by an upstream stage: "
        "requires synchronization under one tag",
        members=sorted(acc_stages | ({decl_stage} if has_init else set()), key=lambda s: s.id),
    )


# --- grouping -------------------------------------------------------------


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[Stage, Stage] = {}

    def find(self, x: Stage) -> Stage:
        self.parent.setdefault(x, x)
        while self.parent[x] is not x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: Stage, b: Stage) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra is not rb:
            self.parent[rb] = ra


@dataclass(eq=False)
class Group:
    tag: str
    members: list[Stage]
    bindings: list[Binding]
    replicable: bool


def assign_groups(placements: dict[Binding, Placement], pipeline: PipelineRepr) -> list[Group]:
    """Union-find over share placements: stages sharing any binding share one
    tag. Handle-carried bindings name the group first (they are what forces
    the grouping at the application border), then earliest declaration."""
    uf = _UnionFind()
    shares = [p for p in placements.values() if p.variant == SHARE]
    for p in shares:
        first = p.members[0]
        for other in p.members[1:]:
            uf.union(first, other)

    clusters: dict[Stage, list[Placement]] = {}
    for p in shares:
        clusters.setdefault(uf.find(p.members[0]), []).append(p)

    groups: list[Group] = []
    used_tags: set[str] = set()
    for root, plist in sorted(clusters.items(), key=lambda kv: kv[0].id):
        members = sorted({s for p in plist for s in p.members}, key=lambda s: s.id)
        if len(members) < 2:
            continue  # a single stage needs no pinning tag
        def name_key(p: Placement) -> tuple:
            return (not p.carried_by_stream, p.binding.decl_node.span.start)

        namer = min(plist, key=name_key)
        tag = f"grp_{namer.binding.name}"
        n = 2
        while tag in used_tags:
            tag = f"grp_{namer.binding.name}_{n}"
            n += 1
        used_tags.add(tag)
        for p in plist:
            p.tag = tag
        slot_bindings = [p.binding for p in plist if not p.carried_by_stream]
        replicable = True
        for p in plist:
            if p.carried_by_stream:
                continue
            decl_stage = pipeline.stage_of(p.binding.decl_node)
            for member in p.members:
                if pipeline.start_edge_between(decl_stage, member):
                    replicable = False
        groups.append(Group(tag, members, [p.binding for p in plist], replicable))
    return groups


# --- fluxion model ---------------------------------------------------------


@dataclass(eq=False)
class StreamDecl:
    kind: str  # START or POST
    dests: list[str]
    msg: list[str]


@dataclass(eq=False)
class FluxionDef:
    id: str
    tags: list[str]
    context: list[str]
    streams: list[StreamDecl]
    body: list[ast.Node]  # statements (main) or one function node (callbacks)


@dataclass(eq=False)
class FlxProgram:
    fluxions: list[FluxionDef]

    def by_id(self, fid: str) -> FluxionDef:
        for f in self.fluxions:
            if f.id == fid:
                return f
        raise KeyError(fid)


def _clone(node: ast.Node, repl: dict[ast.Node, ast.Node]) -> ast.Node:
    """Deep copy with node-identity substitution."""
    if node in repl:
        return repl[node]
    if isinstance(node, ast.Program):
        out: ast.Node = ast.Program([_clone(c, repl) for c in node.body])
    elif isinstance(node, ast.Block):
        out = ast.Block([_clone(c, repl) for c in node.body])
    elif isinstance(node, ast.VarDecl):
        out = ast.VarDecl(node.name, _clone(node.init, repl) if node.init else None)
    elif isinstance(node, ast.FunctionDecl):
        out = ast.FunctionDecl(node.name, list(node.params), _clone(node.body, repl))
    elif isinstance(node, ast.FunctionExpr):
        out = ast.FunctionExpr(node.name, list(node.params), _clone(node.body, repl))
    elif isinstance(node, ast.Return):
        out = ast.Return(_clone(node.argument, repl) if node.argument else None)
    elif isinstance(node, ast.If):
        out = ast.If(
            _clone(node.test, repl),
            _clone(node.consequent, repl),
            _clone(node.alternate, repl) if node.alternate else None,
        )
    elif isinstance(node, ast.ExprStmt):
        out = ast.ExprStmt(_clone(node.expr, repl))
    elif isinstance(node, ast.Identifier):
        out = ast.Identifier(node.name)
    elif isinstance(node, ast.NumberLit):
        out = ast.NumberLit(node.value)
    elif isinstance(node, ast.StringLit):
        out = ast.StringLit(node.value)
    elif isinstance(node, ast.BoolLit):
        out = ast.BoolLit(node.value)
    elif isinstance(node, ast.NullLit):
        out = ast.NullLit()
    elif isinstance(node, ast.Call):
        out = ast.Call(_clone(node.callee, repl), [_clone(a, repl) for a in node.args])
    elif isinstance(node, ast.Member):
        out = ast.Member(_clone(node.obj, repl), node.prop)
    elif isinstance(node, ast.Assign):
        out = ast.Assign(node.op, _clone(node.target, repl), _clone(node.value, repl))
    elif isinstance(node, ast.Binary):
        out = ast.Binary(node.op, _clone(node.left, repl), _clone(node.right, repl))
    elif isinstance(node, ast.Unary):
        out = ast.Unary(node.op, _clone(node.operand, repl))
    elif isinstance(node, ast.ObjectLit):
        out = ast.ObjectLit([(k, _clone(v, repl)) for k, v in node.props])
    elif isinstance(node, ast.StreamPlaceholder):
        out = ast.StreamPlaceholder(node.kind, list(node.dests))
    else:  # pragma: no cover
        raise TypeError(f"cannot clone {type(node).__name__}")
    out.span = node.span
    return out


def build_fluxions(
    pipeline: PipelineRepr,
    placements: dict[Binding, Placement],
    groups: list[Group],
    warnings: list[str] | None = None,
) -> FlxProgram:
    """One fluxion per stage, stream placeholders in place of callbacks."""
    warnings = warnings if warnings is not None else []

    # fluxion ids: main, declared callback names, anonymous_1000+k
    names: dict[Stage, str] = {}
    used: set[str] = set()
    anon = 0
    for stage in pipeline.stages:
        if stage.is_main:
            base = "main"
        else:
            root = stage.root
            fname = root.name if isinstance(root, (ast.FunctionDecl, ast.FunctionExpr)) else None
            if fname:
                base = fname
            else:
                base = f"anonymous_{1000 + anon}"
                anon += 1
        name = base
        n = 2
        while name in used:
            name = f"{base}_{n}"
            n += 1
        if name != base:
            warnings.append(f"fluxion name {base!r} already taken; using {name!r}")
        used.add(name)
        names[stage] = name

    # replace every resolved callback (in-situ argument or walk-back site)
    # with its placeholder
    repl: dict[ast.Node, ast.Node] = {}
    for stage in pipeline.stages[1:]:
        rupture = stage.rupture
        assert rupture is not None and isinstance(rupture.callback, Resolved)
        ph = ast.StreamPlaceholder(rupture.kind, [names[stage]])
        repl[rupture.callback.function] = ph

    # message lists per edge, slot names per stage
    edge_msgs: dict[Edge, list[str]] = {e: [] for e in pipeline.edges}
    slots: dict[Stage, list[tuple[str, Binding]]] = {s: [] for s in pipeline.stages}

    def decl_order(b: Binding) -> int:
        return b.decl_node.span.start

    for binding in sorted(placements, key=decl_order):
        p = placements[binding]
        if p.variant == SCOPE and p.stage is not None:
            if pipeline.stage_of(binding.decl_node) is not p.stage:
                slots[p.stage].append((binding.name, binding))
        elif p.variant == STREAM or (p.variant == SHARE and p.carried_by_stream):
            for e in p.edges:
                if binding.name in edge_msgs[e]:
                    raise NameCollision(
                        f"two bindings named {binding.name!r} stream on one edge"
                    )
                edge_msgs[e].append(binding.name)
        if p.variant == SHARE and not p.carried_by_stream:
            acc_stages = {
                pipeline.stage_of(a.node)
                for a in pipeline.graph.accesses
                if a.binding is binding
            }
            for s in sorted(acc_stages & set(p.members), key=lambda x: x.id):
                slots[s].append((binding.name, binding))
        p.slot_stages = []

    for stage, entries in slots.items():
        seen_names: dict[str, Binding] = {}
        for name, binding in entries:
            if name in seen_names and seen_names[name] is not binding:
                raise NameCollision(f"two bindings named {name!r} share a context in one group")
            seen_names[name] = binding

    for binding, p in placements.items():
        p.slot_stages = [s for s, entries in slots.items() if any(b is binding for _, b in entries)]

    tags_of: dict[Stage, list[str]] = {s: [] for s in pipeline.stages}
    for g in groups:
        for s in g.members:
            tags_of[s].append(g.tag)

    fluxions: list[FluxionDef] = []
    for stage in pipeline.stages:
        out_edges = [e for e in pipeline.edges if e.src is stage]
        out_edges.sort(key=lambda e: e.rupture.call_site.span.start)
        streams = [StreamDecl(e.kind, [names[e.dst]], list(edge_msgs[e])) for e in out_edges]
        if stage.is_main:
            body = [_clone(stmt, repl) for stmt in pipeline.program.body]
        else:
            own_repl = {k: v for k, v in repl.items() if k is not stage.root}
            fn = _clone(stage.root, own_repl)
            if isinstance(fn, ast.FunctionExpr) and fn.name:
                named = ast.FunctionDecl(fn.name, fn.params, fn.body)
                named.span = fn.span
                fn = named
            body = [fn]
        fluxions.append(
            FluxionDef(
                id=names[stage],
                tags=list(tags_of[stage]),
                context=[n for n, _ in slots[stage]],
                streams=streams,
                body=body,
            )
        )
    return FlxProgram(fluxions)


# --- compilation driver -----------------------------------------------------


@dataclass(eq=False)
class CompileResult:
    program: ast.Program
    graph: ScopeGraph
    pipeline: PipelineRepr
    placements: dict[Binding, Placement]
    groups: list[Group]
    flx: FlxProgram
    warnings: list[str]


def place_variables(pipeline: PipelineRepr, graph: ScopeGraph) -> dict[Binding, Placement]:
    """Classify every binding; module aliases, plain function definitions and
    frame-locals come out with the ``none`` placement."""
    consumed: set[ast.Node] = set()
    for r in pipeline.ruptures:
        if isinstance(r.callback, Resolved) and r.callback.via == "walk-back":
            if r.arg_index is not None:
                arg = r.call_site.args[r.arg_index]
                if isinstance(arg, ast.Identifier):
                    consumed.add(arg)

    placements: dict[Binding, Placement] = {}
    for binding in graph.bindings:
        if binding.kind == "fnexpr-name":
            continue
        if _is_module_alias(binding, graph):
            placements[binding] = Placement(binding, NONE, "runtime module alias")
            continue
        if _is_function_valued(binding, graph):
            accesses = [
                a
                for a in graph.accesses
                if a.binding is binding and a.node not in consumed and a.kind == READ
            ]
            decl_stage = pipeline.stage_of(binding.decl_node)
            outside = [a for a in accesses if pipeline.stage_of(a.node) is not decl_stage]
            if outside:
                n = outside[0].node
                raise UnsupportedClosureTransfer(
                    f"function value {binding.name!r} crosses a stage boundary at "
                    f"{n.span.line}:{n.span.col}; only rupture callbacks may"
                )
            placements[binding] = Placement(binding, NONE, "function definition, local to its stage")
            continue
        placements[binding] = classify_variable(binding, pipeline, graph, consumed)
    return placements


def compile_program(
    program: ast.Program, callees: list[AsyncCallee] | None = None
) -> CompileResult:
    graph = build_scope_graph(program)
    pipeline = analyze(program, graph, callees)
    placements = place_variables(pipeline, graph)
    groups = assign_groups(placements, pipeline)
    warnings: list[str] = []
    flx = build_fluxions(pipeline, placements, groups, warnings)
    return CompileResult(program, graph, pipeline, placements, groups, flx, warnings)


def compile_source(source: str, callees: list[AsyncCallee] | None = None) -> CompileResult:
    return compile_program(parse(source), callees)


def placement_report(result: CompileResult) -> dict:
    """Machine-readable account of every placement decision."""
    pipeline = result.pipeline
    names: dict[Stage, str] = {}
    for f, stage in zip(result.flx.fluxions, pipeline.stages):
        names[stage] = f.id

    bindings_doc = []
    for binding in sorted(result.placements, key=lambda b: (b.decl_node.span.start, b.name)):
        p = result.placements[binding]
        doc: dict = {
            "name": binding.name,
            "declLine": binding.decl_node.span.line,
            "declStage": names[pipeline.stage_of(binding.decl_node)],
            "placement": p.variant,
            "rule": p.rule,
        }
        if p.variant == SCOPE and p.stage is not None:
            doc["stage"] = names[p.stage]
        if p.variant == STREAM:
            doc["edges"] = [f"{names[e.src]}->{names[e.dst]}" for e in p.edges]
        if p.variant == SHARE:
            doc["members"] = [names[s] for s in p.members]
            doc["tag"] = p.tag
            if p.carried_by_stream:
                doc["carriedByStream"] = True
                doc["edges"] = [f"{names[e.src]}->{names[e.dst]}" for e in p.edges]
        bindings_doc.append(doc)

    return {
        "bindings": bindings_doc,
        "groups": [
            {
                "bindings": sorted(b.name for b in g.bindings),
                "members": [names[s] for s in g.members],
                "replicable": g.replicable,
                "tag": g.tag,
            }
            for g in result.groups
        ],
        "warnings": list(result.warnings),
    }
