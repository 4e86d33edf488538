"""AST for the MiniJS subset.

Nodes are mutable dataclasses with identity semantics (``eq=False``) so they
can key dictionaries during analysis. Every node carries a dense ``node_id``
(assigned in pre-order by :func:`renumber`) and a source :class:`Span`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator


@dataclass(frozen=True)
class Span:
    start: int = 0
    end: int = 0
    line: int = 1
    col: int = 1


NO_SPAN = Span()


@dataclass(eq=False)
class Node:
    node_id: int = field(default=-1, init=False)
    span: Span = field(default=NO_SPAN, init=False)


# --- statements ---------------------------------------------------------


@dataclass(eq=False)
class Program(Node):
    body: list[Node]


@dataclass(eq=False)
class VarDecl(Node):
    """Single-binding ``var``; multi-binding declarations are desugared."""

    name: str
    init: Node | None


@dataclass(eq=False)
class FunctionDecl(Node):
    name: str
    params: list[str]
    body: Block


@dataclass(eq=False)
class Block(Node):
    body: list[Node]


@dataclass(eq=False)
class Return(Node):
    argument: Node | None


@dataclass(eq=False)
class If(Node):
    test: Node
    consequent: Block
    alternate: Node | None  # Block or If


@dataclass(eq=False)
class ExprStmt(Node):
    expr: Node


# --- expressions --------------------------------------------------------


@dataclass(eq=False)
class Identifier(Node):
    name: str


@dataclass(eq=False)
class NumberLit(Node):
    value: float


@dataclass(eq=False)
class StringLit(Node):
    value: str


@dataclass(eq=False)
class BoolLit(Node):
    value: bool


@dataclass(eq=False)
class NullLit(Node):
    pass


@dataclass(eq=False)
class FunctionExpr(Node):
    name: str | None
    params: list[str]
    body: Block


@dataclass(eq=False)
class Call(Node):
    callee: Node
    args: list[Node]


@dataclass(eq=False)
class Member(Node):
    obj: Node
    prop: str


@dataclass(eq=False)
class Assign(Node):
    op: str  # '=' or '+='
    target: Node  # Identifier or Member
    value: Node


@dataclass(eq=False)
class Binary(Node):
    op: str  # + - * / || == !=
    left: Node
    right: Node


@dataclass(eq=False)
class Unary(Node):
    op: str  # - !
    operand: Node


@dataclass(eq=False)
class ObjectLit(Node):
    props: list[tuple[str, Node]]


@dataclass(eq=False)
class StreamPlaceholder(Node):
    """Marks where a rupture callback stood; renders as ``>> id`` / ``-> id``."""

    kind: str  # 'start' or 'post'
    dests: list[str]


def children(node: Node) -> list[Node]:
    """Child nodes in source order."""
    if isinstance(node, (Program, Block)):
        return list(node.body)
    if isinstance(node, VarDecl):
        return [node.init] if node.init is not None else []
    if isinstance(node, (FunctionDecl, FunctionExpr)):
        return [node.body]
    if isinstance(node, Return):
        return [node.argument] if node.argument is not None else []
    if isinstance(node, If):
        out = [node.test, node.consequent]
        if node.alternate is not None:
            out.append(node.alternate)
        return out
    if isinstance(node, ExprStmt):
        return [node.expr]
    if isinstance(node, Call):
        return [node.callee, *node.args]
    if isinstance(node, Member):
        return [node.obj]
    if isinstance(node, Assign):
        return [node.target, node.value]
    if isinstance(node, Binary):
        return [node.left, node.right]
    if isinstance(node, Unary):
        return [node.operand]
    if isinstance(node, ObjectLit):
        return [v for _, v in node.props]
    return []


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal including ``node`` itself."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def renumber(root: Node) -> None:
    """Assign dense pre-order node ids 0..n-1."""
    for i, n in enumerate(walk(root)):
        n.node_id = i


def parent_map(root: Node) -> dict[Node, Node]:
    parents: dict[Node, Node] = {}
    for n in walk(root):
        for c in children(n):
            parents[c] = n
    return parents


def _shape(node: Node):
    """Type-specific fields that participate in structural equality."""
    if isinstance(node, VarDecl):
        return (node.name, node.init is None)
    if isinstance(node, FunctionDecl):
        return (node.name, tuple(node.params))
    if isinstance(node, FunctionExpr):
        return (node.name, tuple(node.params))
    if isinstance(node, Identifier):
        return (node.name,)
    if isinstance(node, NumberLit):
        return (node.value,)
    if isinstance(node, StringLit):
        return (node.value,)
    if isinstance(node, BoolLit):
        return (node.value,)
    if isinstance(node, (Assign, Binary, Unary)):
        return (node.op,)
    if isinstance(node, ObjectLit):
        return tuple(k for k, _ in node.props)
    if isinstance(node, StreamPlaceholder):
        return (node.kind, tuple(node.dests))
    if isinstance(node, Return):
        return (node.argument is None,)
    if isinstance(node, If):
        return (node.alternate is None,)
    return ()


def structurally_equal(a: Node, b: Node) -> bool:
    """Equality ignoring node ids and spans."""
    if type(a) is not type(b) or _shape(a) != _shape(b):
        return False
    ca, cb = children(a), children(b)
    if len(ca) != len(cb):
        return False
    return all(structurally_equal(x, y) for x, y in zip(ca, cb))
