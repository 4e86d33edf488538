"""Strict evaluator for the MiniJS subset.

One evaluator serves both executions: the sequential event-loop oracle and
the fluxional runtime. The :class:`World` supplies the intrinsic surface
(``require``, the express-style app, the virtual file system, timers,
``template``, ``busy``) and decides how asynchronous callbacks are
delivered; hosts override :meth:`World.call_async` and the placeholder
hook. Any divergence between the two executions therefore isolates the
transformation, not the evaluator.
"""

from __future__ import annotations

import time
from typing import Any

from . import ast
from .errors import FluxRuntimeError
from .values import (
    Closure,
    to_value,
    ContinuationHandle,
    Intrinsic,
    ResponseHandle,
    StreamHandle,
    busy_burn,
    js_eq,
    js_str,
    js_truthy,
)

FILENAME = "main.mjs-mini"
DEFAULT_FILE_CONTENT = "<file>"


class Environment:
    """Lexical environment; the root of a fluxion body also carries the
    group's context cells and the read-only ambient table."""

    __slots__ = ("vars", "parent", "cells", "ambient")

    def __init__(
        self,
        parent: Environment | None = None,
        cells: dict[str, Any] | None = None,
        ambient: dict[str, Any] | None = None,
    ):
        self.vars: dict[str, Any] = {}
        self.parent = parent
        self.cells = cells
        self.ambient = ambient

    def lookup(self, name: str) -> Any:
        env: Environment | None = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            if env.cells is not None and name in env.cells:
                return env.cells[name]
            if env.ambient is not None and name in env.ambient:
                return env.ambient[name]
            env = env.parent
        raise FluxRuntimeError(f"reference error: {name} is not defined")

    def assign(self, name: str, value: Any) -> None:
        env: Environment | None = self
        while env is not None:
            if name in env.vars:
                env.vars[name] = value
                return
            if env.cells is not None and name in env.cells:
                env.cells[name] = value
                return
            env = env.parent
        raise FluxRuntimeError(f"reference error: assignment to undeclared {name}")

    def declare(self, name: str, value: Any) -> None:
        # a context cell with this name wins over a fresh local so the body
        # seeds persistent state instead of shadowing it
        if self.cells is not None and name in self.cells:
            return
        self.vars[name] = value


class _Return(Exception):
    def __init__(self, value: Any):
        self.value = value


class Interpreter:
    def __init__(self, world: "World"):
        self.world = world

    # -- function machinery --

    def hoist(self, stmts: list[ast.Node], env: Environment) -> None:
        """Function-scope hoisting of ``var`` and function declarations."""
        for stmt in stmts:
            if isinstance(stmt, ast.VarDecl):
                if stmt.name not in env.vars:
                    env.declare(stmt.name, None)
            elif isinstance(stmt, ast.FunctionDecl):
                # function bindings are code, not placed state: always local
                env.vars[stmt.name] = Closure(stmt.name, stmt.params, stmt.body, env)
            elif isinstance(stmt, ast.If):
                self.hoist(stmt.consequent.body, env)
                if isinstance(stmt.alternate, ast.Block):
                    self.hoist(stmt.alternate.body, env)
                elif isinstance(stmt.alternate, ast.If):
                    self.hoist([stmt.alternate], env)

    def call_value(self, fn: Any, args: list[Any]) -> Any:
        if isinstance(fn, Closure):
            env = Environment(parent=fn.env)
            if fn.name is not None:
                env.declare(fn.name, fn)
            for i, p in enumerate(fn.params):
                env.vars[p] = args[i] if i < len(args) else None
            self.hoist(fn.body.body, env)
            try:
                self.exec_statements(fn.body.body, env)
            except _Return as r:
                return r.value
            return None
        if isinstance(fn, Intrinsic):
            return fn.fn(args)
        if isinstance(fn, ContinuationHandle):
            return fn.fn(args)
        if isinstance(fn, StreamHandle):
            return fn.sender(fn, args)
        raise FluxRuntimeError(f"type error: {js_str(fn)!s} is not a function")

    # -- statements --

    def exec_statements(self, stmts: list[ast.Node], env: Environment) -> None:
        for stmt in stmts:
            self.exec_statement(stmt, env)

    def exec_statement(self, stmt: ast.Node, env: Environment) -> None:
        if isinstance(stmt, ast.VarDecl):
            if stmt.init is not None:
                value = self.eval(stmt.init, env)
                if env.cells is not None and stmt.name in env.cells and stmt.name not in env.vars:
                    env.cells[stmt.name] = value
                else:
                    env.vars[stmt.name] = value
            return
        if isinstance(stmt, ast.FunctionDecl):
            return  # hoisted
        if isinstance(stmt, ast.ExprStmt):
            self.eval(stmt.expr, env)
            return
        if isinstance(stmt, ast.Return):
            raise _Return(self.eval(stmt.argument, env) if stmt.argument else None)
        if isinstance(stmt, ast.If):
            if js_truthy(self.eval(stmt.test, env)):
                self.exec_statements(stmt.consequent.body, env)
            elif isinstance(stmt.alternate, ast.Block):
                self.exec_statements(stmt.alternate.body, env)
            elif isinstance(stmt.alternate, ast.If):
                self.exec_statement(stmt.alternate, env)
            return
        raise FluxRuntimeError(f"cannot execute {type(stmt).__name__}")

    # -- expressions --

    def eval(self, node: ast.Node, env: Environment) -> Any:
        if isinstance(node, ast.NumberLit):
            return node.value
        if isinstance(node, ast.StringLit):
            return node.value
        if isinstance(node, ast.BoolLit):
            return node.value
        if isinstance(node, ast.NullLit):
            return None
        if isinstance(node, ast.Identifier):
            return env.lookup(node.name)
        if isinstance(node, ast.FunctionExpr):
            return Closure(node.name, node.params, node.body, env)
        if isinstance(node, ast.Binary):
            if node.op == "||":
                left = self.eval(node.left, env)
                return left if js_truthy(left) else self.eval(node.right, env)
            left = self.eval(node.left, env)
            right = self.eval(node.right, env)
            return self._binary(node.op, left, right)
        if isinstance(node, ast.Unary):
            value = self.eval(node.operand, env)
            if node.op == "!":
                return not js_truthy(value)
            if isinstance(value, float):
                return -value
            raise FluxRuntimeError(f"type error: cannot negate {js_str(value)}")
        if isinstance(node, ast.Assign):
            return self._assign(node, env)
        if isinstance(node, ast.Call):
            callee = self.eval(node.callee, env)
            args = [self.eval(a, env) for a in node.args]
            return self.call_value(callee, args)
        if isinstance(node, ast.Member):
            obj = self.eval(node.obj, env)
            return self._member_get(obj, node.prop)
        if isinstance(node, ast.ObjectLit):
            return {k: self.eval(v, env) for k, v in node.props}
        if isinstance(node, ast.StreamPlaceholder):
            return self.world.placeholder_value(node, env)
        raise FluxRuntimeError(f"cannot evaluate {type(node).__name__}")

    def _binary(self, op: str, left: Any, right: Any) -> Any:
        if op == "+":
            if isinstance(left, float) and isinstance(right, float):
                return left + right
            if isinstance(left, str) or isinstance(right, str):
                return js_str(left) + js_str(right)
            raise FluxRuntimeError(f"type error: cannot add {js_str(left)} and {js_str(right)}")
        if op in ("-", "*", "/"):
            if not (isinstance(left, float) and isinstance(right, float)) or isinstance(left, bool) or isinstance(right, bool):
                raise FluxRuntimeError(f"type error: arithmetic on non-numbers")
            if op == "-":
                return left - right
            if op == "*":
                return left * right
            if right == 0.0:
                return float("inf") if left > 0 else float("-inf") if left < 0 else float("nan")
            return left / right
        if op == "==":
            return js_eq(left, right)
        if op == "!=":
            return not js_eq(left, right)
        raise FluxRuntimeError(f"unknown operator {op}")

    def _assign(self, node: ast.Assign, env: Environment) -> Any:
        target = node.target
        if isinstance(target, ast.Identifier):
            if node.op == "+=":
                value = self._binary("+", env.lookup(target.name), self.eval(node.value, env))
            else:
                value = self.eval(node.value, env)
            env.assign(target.name, value)
            return value
        if isinstance(target, ast.Member):
            obj = self.eval(target.obj, env)
            if not isinstance(obj, dict):
                raise FluxRuntimeError(f"type error: cannot set property {target.prop!r} on {js_str(obj)}")
            if node.op == "+=":
                value = self._binary("+", obj.get(target.prop), self.eval(node.value, env))
            else:
                value = self.eval(node.value, env)
            obj[target.prop] = value
            return value
        raise FluxRuntimeError("invalid assignment target")

    def _member_get(self, obj: Any, prop: str) -> Any:
        if isinstance(obj, dict):
            return obj.get(prop)
        if isinstance(obj, ResponseHandle):
            if prop == "send":
                return Intrinsic("send", lambda args: obj.send(args[0] if args else None), transferable=True)
            raise FluxRuntimeError(f"type error: response handle has no property {prop!r}")
        if obj is None:
            raise FluxRuntimeError(f"type error: cannot read property {prop!r} of null")
        raise FluxRuntimeError(f"type error: cannot read property {prop!r} of {js_str(obj)}")


class World:
    """Intrinsic modules and request plumbing; hosts specialize delivery."""

    def __init__(self, virtual_files: dict[str, str] | None = None):
        self.virtual_files = dict(virtual_files) if virtual_files is not None else {FILENAME: DEFAULT_FILE_CONTENT}
        self.routes: dict[str, list[Any]] = {}
        self.listening_port: float | None = None
        self.responses: list[tuple[int, Any]] = []
        self.dead_letters: list[dict] = []
        self._origin = 0
        self._app: dict[str, Any] | None = None

    # -- host hooks --

    def call_async(self, cb: Any, args: list[Any]) -> None:
        """Deliver an asynchronous completion to ``cb``."""
        raise NotImplementedError

    def placeholder_value(self, node: ast.StreamPlaceholder, env: Environment) -> Any:
        raise FluxRuntimeError("stream placeholders cannot execute in this host")

    def record_response(self, origin: int, value: Any) -> None:
        self.responses.append((origin, value))

    # -- request plumbing --

    def next_origin(self) -> int:
        self._origin += 1
        return self._origin

    def make_request(self, path: str, body: Any) -> tuple[int, dict, ResponseHandle]:
        origin = self.next_origin()
        req = {"path": path, "body": to_value(body), "headers": {}}
        res = ResponseHandle(origin, self.record_response)
        return origin, req, res

    def dispatch_chain(self, interp: Interpreter, cbs: list[Any], req: dict, res: ResponseHandle) -> None:
        """Run a route's middleware chain; ``next()`` advances it."""

        def run_at(i: int) -> Any:
            if i >= len(cbs):
                return None
            nxt = ContinuationHandle("next", lambda args, _i=i: run_at(_i + 1))
            return interp.call_value(cbs[i], [req, res, nxt])

        run_at(0)

    # -- intrinsic modules --

    def app_stub(self) -> dict[str, Any]:
        if self._app is None:

            def register(args: list[Any]) -> None:
                if not args or not isinstance(args[0], str):
                    raise FluxRuntimeError("listener registration needs a path string")
                self.routes[args[0]] = list(args[1:])

            def listen(args: list[Any]) -> None:
                self.listening_port = args[0] if args else None

            self._app = {
                "get": Intrinsic("app.get", register),
                "post": Intrinsic("app.post", register),
                "listen": Intrinsic("app.listen", listen),
            }
        return self._app

    def _read_file(self, args: list[Any]) -> None:
        if len(args) < 2:
            raise FluxRuntimeError("readFile needs a path and a callback")
        path, cb = args[0], args[-1]
        name = js_str(path)
        if name in self.virtual_files:
            self.call_async(cb, [None, self.virtual_files[name]])
        else:
            self.call_async(cb, [f"ENOENT: {name}", None])

    def _get_raw_body(self, args: list[Any]) -> None:
        if len(args) < 2:
            raise FluxRuntimeError("getRawBody needs a request and a callback")
        req, cb = args[0], args[-1]
        body = req.get("body") if isinstance(req, dict) else None
        self.call_async(cb, [None, body])

    def _require(self, args: list[Any]) -> Any:
        name = js_str(args[0]) if args else ""
        if name == "express":
            return Intrinsic("express", lambda _args: self.app_stub())
        if name == "fs":
            return {"readFile": Intrinsic("fs.readFile", self._read_file)}
        if name == "raw-body":
            return Intrinsic("getRawBody", self._get_raw_body)
        if name == "gifsockets-middleware":

            def write_text(cargs: list[Any]) -> None:
                req = cargs[0] if cargs else None
                res = cargs[1] if len(cargs) > 1 else None
                if not isinstance(res, ResponseHandle):
                    raise FluxRuntimeError("writeTextToImages needs a response handle")
                body = req.get("body") if isinstance(req, dict) else None
                res.send("gif:" + js_str(body))

            return {"writeTextToImages": Intrinsic("writeTextToImages", write_text)}
        raise FluxRuntimeError(f"unknown module {name!r}")

    def ambient(self) -> dict[str, Any]:
        """Names every execution context can resolve without declaration."""

        def template(args: list[Any]) -> str:
            count = args[0] if args else None
            data = args[1] if len(args) > 1 else None
            return js_str(count) + ":" + js_str(data)

        def delay(args: list[Any]) -> None:
            if len(args) < 2:
                raise FluxRuntimeError("timer.delay needs a delay and a callback")
            self.call_async(args[-1], [args[0]])

        return {
            "require": Intrinsic("require", self._require),
            "template": Intrinsic("template", template),
            "timer": {"delay": Intrinsic("timer.delay", delay)},
            "now": Intrinsic("now", lambda args: time.perf_counter()),
            "busy": Intrinsic("busy", lambda args: busy_burn(args[0] if args else 1.0)),
            "__filename": FILENAME,
        }
