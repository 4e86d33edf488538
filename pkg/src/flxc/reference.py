"""Sequential event-loop execution of the original source program.

Callbacks run on one FIFO task queue, asynchronous intrinsics enqueue their
continuations, and closures capture the live environment. The observed
outputs are the oracle the parallel runtime is checked against.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any

from . import ast
from .errors import FluxRuntimeError, NoRouteError
from .interpreter import Environment, Interpreter, World
from .values import Closure, ContinuationHandle, Intrinsic, ResponseHandle, StreamHandle


@dataclass(eq=False)
class ObservedOutputs:
    responses: list[tuple[int, Any]]
    final_globals: dict[str, Any]
    dead_letters: list[dict] = field(default_factory=list)


class SequentialWorld(World):
    def __init__(self, virtual_files: dict[str, str] | None = None):
        super().__init__(virtual_files)
        self.tasks: deque[tuple[Any, list[Any]]] = deque()

    def call_async(self, cb: Any, args: list[Any]) -> None:
        self.tasks.append((cb, args))


def _plain_value(value: Any) -> bool:
    if value is None or isinstance(value, (bool, float, str)):
        return True
    if isinstance(value, list):
        return all(_plain_value(v) for v in value)
    if isinstance(value, dict):
        return all(_plain_value(v) for v in value.values())
    return False


def run_sequential(
    program: ast.Program,
    workload: list[dict] | None = None,
    virtual_files: dict[str, str] | None = None,
) -> ObservedOutputs:
    """Execute ``program`` under classic single-threaded event-loop
    semantics and return its observable outputs."""
    world = SequentialWorld(virtual_files)
    interp = Interpreter(world)
    genv = Environment(cells=None, ambient=world.ambient())

    interp.hoist(program.body, genv)
    interp.exec_statements(program.body, genv)

    for request in workload or []:
        path = request["path"]
        if path not in world.routes:
            raise NoRouteError(f"no listener installed for {path!r}")
        origin, req, res = world.make_request(path, request.get("body"))
        cbs = list(world.routes[path])
        world.tasks.append(
            (Intrinsic("dispatch", lambda args, c=cbs, q=req, r=res: world.dispatch_chain(interp, c, q, r)), [])
        )

    while world.tasks:
        cb, args = world.tasks.popleft()
        try:
            interp.call_value(cb, args)
        except FluxRuntimeError as exc:
            world.dead_letters.append({"error": str(exc)})

    final_globals = {
        name: value for name, value in genv.vars.items() if _plain_value(value)
    }
    return ObservedOutputs(list(world.responses), final_globals, list(world.dead_letters))
