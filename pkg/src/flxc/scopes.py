"""Memory-scope analysis: per-variable declaration, read and write sites,
plus closure captures across function boundaries.

Scoping is function-level: one scope per function body plus the global
scope. ``var`` hoists to the nearest function scope, function declarations
hoist to the top of their scope, and a named function expression binds its
name only inside its own scope. Property writes such as ``req.body = x``
count as a read-write of the base binding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast

READ = "read"
WRITE = "write"
READWRITE = "readwrite"


@dataclass(eq=False)
class Scope:
    id: int
    owner: ast.Node  # Program, FunctionDecl or FunctionExpr
    parent: Scope | None
    bindings: dict[str, Binding] = field(default_factory=dict)

    def lookup(self, name: str) -> Binding | None:
        scope: Scope | None = self
        while scope is not None:
            if name in scope.bindings:
                return scope.bindings[name]
            scope = scope.parent
        return None


@dataclass(eq=False)
class Binding:
    id: int
    name: str
    scope: Scope
    decl_node: ast.Node
    kind: str  # 'var' | 'func' | 'param' | 'fnexpr-name'
    has_init: bool

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Binding({self.name}@{self.id})"


@dataclass(eq=False)
class Access:
    binding: Binding
    node: ast.Node  # the identifier node
    kind: str


@dataclass(eq=False)
class ScopeGraph:
    program: ast.Program
    scopes: list[Scope]
    bindings: list[Binding]
    accesses: list[Access]
    unresolved: list[tuple[str, ast.Node]]
    scope_of_function: dict[ast.Node, Scope]
    parents: dict[ast.Node, ast.Node]

    def accesses_of(self, binding: Binding) -> list[Access]:
        return [a for a in self.accesses if a.binding is binding]

    def enclosing_function(self, node: ast.Node) -> ast.Node:
        """Nearest enclosing function node (or the program) of ``node``."""
        cur = self.parents.get(node)
        while cur is not None:
            if isinstance(cur, (ast.FunctionDecl, ast.FunctionExpr, ast.Program)):
                return cur
            cur = self.parents.get(cur)
        return self.program

    def within(self, outer: ast.Node, node: ast.Node) -> bool:
        """True when ``node`` is ``outer`` or lies in its subtree."""
        cur: ast.Node | None = node
        while cur is not None:
            if cur is outer:
                return True
            cur = self.parents.get(cur)
        return False


def _is_function(node: ast.Node) -> bool:
    return isinstance(node, (ast.FunctionDecl, ast.FunctionExpr))


class _Builder:
    def __init__(self, program: ast.Program):
        self.program = program
        self.scopes: list[Scope] = []
        self.bindings: list[Binding] = []
        self.accesses: list[Access] = []
        self.unresolved: list[tuple[str, ast.Node]] = []
        self.scope_of_function: dict[ast.Node, Scope] = {}
        self.parents = ast.parent_map(program)

    def new_scope(self, owner: ast.Node, parent: Scope | None) -> Scope:
        scope = Scope(len(self.scopes), owner, parent)
        self.scopes.append(scope)
        self.scope_of_function[owner] = scope
        return scope

    def declare(self, scope: Scope, name: str, decl_node: ast.Node, kind: str, has_init: bool) -> Binding:
        existing = scope.bindings.get(name)
        if existing is not None:
            # repeated var/function in one scope: keep the first binding but a
            # later initialized declaration marks it initialized
            existing.has_init = existing.has_init or has_init
            return existing
        binding = Binding(len(self.bindings), name, scope, decl_node, kind, has_init)
        self.bindings.append(binding)
        scope.bindings[name] = binding
        return binding

    # declaration pass: hoist vars, function declarations and params into
    # their function scope before resolving any use
    def hoist(self, fn_body: list[ast.Node], scope: Scope) -> None:
        for stmt in fn_body:
            self._hoist_stmt(stmt, scope)

    def _hoist_stmt(self, node: ast.Node, scope: Scope) -> None:
        if isinstance(node, ast.VarDecl):
            self.declare(scope, node.name, node, "var", node.init is not None)
        elif isinstance(node, ast.FunctionDecl):
            self.declare(scope, node.name, node, "func", True)
        elif isinstance(node, ast.If):
            for s in node.consequent.body:
                self._hoist_stmt(s, scope)
            if isinstance(node.alternate, ast.Block):
                for s in node.alternate.body:
                    self._hoist_stmt(s, scope)
            elif isinstance(node.alternate, ast.If):
                self._hoist_stmt(node.alternate, scope)

    def build(self) -> ScopeGraph:
        global_scope = self.new_scope(self.program, None)
        self.hoist(self.program.body, global_scope)
        for stmt in self.program.body:
            self.visit(stmt, global_scope)
        return ScopeGraph(
            self.program,
            self.scopes,
            self.bindings,
            self.accesses,
            self.unresolved,
            self.scope_of_function,
            self.parents,
        )

    def enter_function(self, fn: ast.Node, outer: Scope) -> None:
        scope = self.new_scope(fn, outer)
        if isinstance(fn, ast.FunctionExpr) and fn.name:
            self.declare(scope, fn.name, fn, "fnexpr-name", True)
        for p in fn.params:
            self.declare(scope, p, fn, "param", False)
        self.hoist(fn.body.body, scope)
        for stmt in fn.body.body:
            self.visit(stmt, scope)

    def use(self, node: ast.Identifier, scope: Scope, kind: str) -> None:
        binding = scope.lookup(node.name)
        if binding is None:
            self.unresolved.append((node.name, node))
            return
        self.accesses.append(Access(binding, node, kind))

    def visit(self, node: ast.Node, scope: Scope) -> None:
        if isinstance(node, ast.VarDecl):
            if node.init is not None:
                self.visit(node.init, scope)
            return
        if isinstance(node, ast.FunctionDecl):
            self.enter_function(node, scope)
            return
        if isinstance(node, ast.FunctionExpr):
            self.enter_function(node, scope)
            return
        if isinstance(node, ast.Assign):
            target = node.target
            if isinstance(target, ast.Identifier):
                self.use(target, scope, WRITE if node.op == "=" else READWRITE)
            elif isinstance(target, ast.Member):
                base = target
                while isinstance(base, ast.Member):
                    base = base.obj
                if isinstance(base, ast.Identifier):
                    self.use(base, scope, READWRITE)
                else:
                    self.visit(base, scope)
            self.visit(node.value, scope)
            return
        if isinstance(node, ast.Identifier):
            self.use(node, scope, READ)
            return
        for child in ast.children(node):
            self.visit(child, scope)


def build_scope_graph(program: ast.Program) -> ScopeGraph:
    return _Builder(program).build()


def captures(fn: ast.Node, graph: ScopeGraph) -> set[Binding]:
    """Bindings declared strictly outside ``fn`` but accessed inside it,
    including accesses from nested functions."""
    if not _is_function(fn):
        raise ValueError("captures() expects a function node")
    out: set[Binding] = set()
    for access in graph.accesses:
        if not graph.within(fn, access.node):
            continue
        owner = access.binding.scope.owner
        if owner is fn or graph.within(fn, owner):
            continue
        out.add(access.binding)
    return out


def scope_graph_json(graph: ScopeGraph) -> dict:
    """Stable JSON document: scopes, bindings and accesses arrays."""
    return {
        "accesses": [
            {"binding": a.binding.id, "kind": a.kind, "node": a.node.node_id}
            for a in graph.accesses
        ],
        "bindings": [
            {
                "declNode": b.decl_node.node_id,
                "hasInit": b.has_init,
                "id": b.id,
                "kind": b.kind,
                "name": b.name,
                "scope": b.scope.id,
            }
            for b in graph.bindings
        ],
        "scopes": [
            {
                "bindings": sorted(s.bindings),
                "id": s.id,
                "owner": s.owner.node_id,
                "parent": s.parent.id if s.parent else None,
            }
            for s in graph.scopes
        ],
        "unresolved": sorted(
            [{"name": name, "node": node.node_id} for name, node in graph.unresolved],
            key=lambda d: (d["name"], d["node"]),
        ),
    }
