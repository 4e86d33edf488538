"""Parallel execution of a fluxional program.

Registration pins every tag group to one worker (round-robin by
registration order, untagged fluxions get their own lane) and runs the
top-level body once to initialize contexts and install listeners. Each
worker drains its own FIFO queue; the only cross-lane operation is the
thread-safe message enqueue. Payloads are deep-copied at enqueue time on
every send, so observable behavior does not depend on the worker count.

``--replicate`` allows groups whose members hold no context slots to be
instantiated once per worker, with start messages routed round-robin by
request identity.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Any

from . import ast
from .errors import (
    DeadlineExceeded,
    EmptyProgram,
    FluxRuntimeError,
    FlxLinkError,
    NoRouteError,
)
from .interpreter import Environment, Interpreter, World
from .pipeliner import FluxionDef, FlxProgram, StreamDecl
from .values import StreamHandle, deep_copy_value


@dataclass(eq=False)
class Message:
    dest: str
    kind: str
    payload: dict[str, Any]
    seq: int
    origin: int
    edge: str  # "src->dst"


@dataclass(frozen=True)
class TraceEvent:
    ts: float
    worker: int
    fluxion: str
    event: str  # receive | send | error
    seq: int | None
    origin: int | None
    edge: str | None = None


@dataclass(frozen=True)
class ExecInterval:
    fluxion: str
    worker: int
    origin: int | None
    start: float
    end: float


@dataclass(eq=False)
class Metrics:
    wall_time: float
    invocations: dict[str, int]
    responses: list[tuple[int, Any]]
    dead_letters: list[dict]
    intervals: list[ExecInterval]
    trace: list[TraceEvent]
    contexts: dict[str, dict[str, Any]]


@dataclass(eq=False)
class _Group:
    index: int
    tags: frozenset[str]
    members: list[str]
    worker: int = 0
    replicated: bool = False
    store: dict[str, Any] = field(default_factory=dict)
    stores: list[dict[str, Any]] = field(default_factory=list)


@dataclass(eq=False)
class _Fluxion:
    defn: FluxionDef
    group: _Group
    params: list[str]
    body_stmts: list[ast.Node]  # statements to run per invocation
    statement_style: bool  # True for top-level-code fluxions


class _RuntimeWorld(World):
    def __init__(self, state: "RuntimeState", virtual_files: dict[str, str] | None):
        super().__init__(virtual_files)
        self.state = state
        self._response_lock = threading.Lock()

    def record_response(self, origin: int, value: Any) -> None:
        with self._response_lock:
            self.responses.append((origin, value))

    def call_async(self, cb: Any, args: list[Any]) -> None:
        if isinstance(cb, StreamHandle):
            self.state.send_via_handle(cb, args)
            return
        cur = self.state.current()
        self.state.enqueue(cur.worker, ("call", cb, args, cur.origin, cur.fluxion))

    def placeholder_value(self, node: ast.StreamPlaceholder, env: Environment) -> Any:
        cur = self.state.current()
        fluxion = self.state.fluxions[cur.fluxion]
        decl = None
        for s in fluxion.defn.streams:
            if s.kind == node.kind and s.dests == node.dests:
                decl = s
                break
        if decl is None:
            raise FluxRuntimeError(
                f"placeholder {node.kind} {node.dests} has no stream declaration",
                fluxion=cur.fluxion,
            )
        return StreamHandle(
            fluxion_id=cur.fluxion,
            kind=decl.kind,
            dests=tuple(decl.dests),
            msg_names=tuple(decl.msg),
            sender=lambda handle, args: self.state.send_via_handle(handle, args),
            env=env,
        )


class _Current(threading.local):
    def __init__(self) -> None:
        self.worker = 0
        self.fluxion = ""
        self.origin: int | None = None


class RuntimeState:
    def __init__(
        self,
        program: FlxProgram,
        workers: int = 1,
        virtual_files: dict[str, str] | None = None,
        replicate: bool = False,
    ):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        if not program.fluxions:
            raise EmptyProgram("program has no fluxions")
        self.program = program
        self.workers = workers
        self.world = _RuntimeWorld(self, virtual_files)
        self.interp = Interpreter(self.world)
        self.ambient: dict[str, Any] = dict(self.world.ambient())

        self.fluxions: dict[str, _Fluxion] = {}
        self.groups: list[_Group] = []
        self.queues: list[queue.SimpleQueue] = [queue.SimpleQueue() for _ in range(workers)]
        self._pending = 0
        self._pending_lock = threading.Lock()
        self._seq: dict[str, int] = {}
        self._seq_lock = threading.Lock()
        # metrics are lane-confined: each worker appends only to its own
        # buffers, merged when metrics are read
        self._trace_by_worker: list[list[TraceEvent]] = [[] for _ in range(workers)]
        self._intervals_by_worker: list[list[ExecInterval]] = [[] for _ in range(workers)]
        self._invocations_by_worker: list[dict[str, int]] = [{} for _ in range(workers)]
        self._dead_lock = threading.Lock()
        self._route_owner: dict[str, str] = {}
        self._cur = _Current()

        self._register(replicate)

    # -- registration --

    def _register(self, replicate: bool) -> None:
        ids = [f.id for f in self.program.fluxions]
        for f in self.program.fluxions:
            for s in f.streams:
                for d in s.dests:
                    if d not in ids:
                        raise FlxLinkError(f"fluxion {f.id!r} streams to unknown {d!r}")

        # groups: connected components over shared tags
        tag_group: dict[str, _Group] = {}
        for f in self.program.fluxions:
            joined = [tag_group[t] for t in f.tags if t in tag_group]
            if joined:
                group = joined[0]
                for other in joined[1:]:
                    if other is not group:
                        group.members.extend(other.members)
                        group.tags = group.tags | other.tags
                        self.groups.remove(other)
                        for t in other.tags:
                            tag_group[t] = group
            else:
                group = _Group(len(self.groups), frozenset(f.tags), [])
                self.groups.append(group)
            group.members.append(f.id)
            group.tags = group.tags | frozenset(f.tags)
            for t in f.tags:
                tag_group[t] = group

            fn: ast.Node | None = None
            if len(f.body) == 1 and isinstance(f.body[0], (ast.FunctionDecl, ast.FunctionExpr)):
                fn = f.body[0]
            if fn is not None:
                flx = _Fluxion(f, group, list(fn.params), list(fn.body.body), False)
            else:
                flx = _Fluxion(f, group, [], list(f.body), True)
            self.fluxions[f.id] = flx

        # pinning: round-robin over groups in registration order
        rr = 0
        pinned: set[int] = set()
        for f in self.program.fluxions:
            group = self.fluxions[f.id].group
            if group.index in pinned:
                continue
            group.worker = rr % self.workers
            rr += 1
            pinned.add(group.index)

        for group in self.groups:
            slots = [n for m in group.members for n in self.fluxions[m].defn.context]
            group.store = {n: None for n in slots}
            if replicate and not slots:
                group.replicated = True
                group.stores = [dict() for _ in range(self.workers)]

        # run top-level bodies once; their frames become the ambient table
        for f in self.program.fluxions:
            flx = self.fluxions[f.id]
            if not flx.statement_style:
                continue
            env = Environment(cells=flx.group.store, ambient=self.ambient)
            self._cur.worker, self._cur.fluxion, self._cur.origin = flx.group.worker, f.id, None
            routes_before = set(self.world.routes)
            self.interp.hoist(flx.body_stmts, env)
            self.interp.exec_statements(flx.body_stmts, env)
            for path in set(self.world.routes) - routes_before:
                self._route_owner[path] = f.id
            for name, value in env.vars.items():
                self.ambient[name] = value

    # -- plumbing --

    def current(self) -> _Current:
        return self._cur

    def enqueue(self, worker: int, item: tuple) -> None:
        with self._pending_lock:
            self._pending += 1
        self.queues[worker].put(item)

    def _worker_for(self, fluxion: _Fluxion, origin: int | None) -> int:
        if fluxion.group.replicated and origin is not None:
            return (origin - 1) % self.workers
        return fluxion.group.worker

    def _store_for(self, fluxion: _Fluxion, origin: int | None) -> dict[str, Any]:
        if fluxion.group.replicated and origin is not None:
            return fluxion.group.stores[(origin - 1) % self.workers]
        return fluxion.group.store

    def _next_seq(self, edge: str) -> int:
        with self._seq_lock:
            self._seq[edge] = self._seq.get(edge, 0) + 1
            return self._seq[edge]

    def _log(self, event: TraceEvent) -> None:
        self._trace_by_worker[event.worker].append(event)

    def send_via_handle(self, handle: StreamHandle, args: list[Any]) -> None:
        """Send one copied message per destination of the handle's stream."""
        origin = self._cur.origin
        for dest in handle.dests:
            dest_flx = self.fluxions[dest]
            payload: dict[str, Any] = {}
            for i, p in enumerate(dest_flx.params):
                if i < len(args):
                    payload[p] = args[i]
            for name in handle.msg_names:
                if name in payload:
                    continue
                if name in handle.env.vars or self._env_has(handle.env, name):
                    payload[name] = handle.env.lookup(name)
                else:
                    raise FluxRuntimeError(
                        f"streamed variable {name!r} is not bound at the send site",
                        fluxion=handle.fluxion_id,
                    )
            payload = {k: deep_copy_value(v) for k, v in payload.items()}
            edge = f"{handle.fluxion_id}->{dest}"
            seq = self._next_seq(edge)
            message = Message(dest, handle.kind, payload, seq, origin if origin is not None else -1, edge)
            self._log(
                TraceEvent(time.perf_counter(), self._cur.worker, handle.fluxion_id, "send", seq, origin, edge)
            )
            self.enqueue(self._worker_for(dest_flx, origin), ("msg", message))

    @staticmethod
    def _env_has(env: Environment, name: str) -> bool:
        cur: Environment | None = env
        while cur is not None:
            if name in cur.vars:
                return True
            if cur.cells is not None and name in cur.cells:
                return True
            if cur.ambient is not None and name in cur.ambient:
                return True
            cur = cur.parent
        return False

    # -- requests --

    def inject_request(self, path: str, body: Any) -> int:
        """Queue one start dispatch for ``path``; returns the request identity."""
        if path not in self.world.routes:
            raise NoRouteError(f"no listener installed for {path!r}")
        origin, req, res = self.world.make_request(path, body)
        cbs = list(self.world.routes[path])
        owner = self._route_owner.get(path)
        owner_flx = self.fluxions[owner] if owner else next(iter(self.fluxions.values()))
        worker = owner_flx.group.worker
        self.enqueue(worker, ("dispatch", origin, req, res, cbs, owner or owner_flx.defn.id))
        return origin

    # -- execution --

    def step(self, worker: int) -> bool:
        """Process one queued item for ``worker``; False when idle."""
        try:
            item = self.queues[worker].get_nowait()
        except queue.Empty:
            return False
        try:
            self._process(item, worker)
        finally:
            with self._pending_lock:
                self._pending -= 1
        return True

    def _process(self, item: tuple, worker: int) -> None:
        kind = item[0]
        prev = (self._cur.worker, self._cur.fluxion, self._cur.origin)
        try:
            if kind == "msg":
                self._process_message(item[1], worker)
            elif kind == "dispatch":
                _, origin, req, res, cbs, owner = item
                self._cur.worker, self._cur.fluxion, self._cur.origin = worker, owner, origin
                t0 = time.perf_counter()
                self._log(TraceEvent(t0, worker, owner, "receive", None, origin))
                try:
                    self.world.dispatch_chain(self.interp, cbs, req, res)
                except FluxRuntimeError as exc:
                    self._dead_letter(owner, origin, exc, worker)
                finally:
                    self._interval(owner, worker, origin, t0)
            elif kind == "call":
                _, cb, args, origin, fluxion = item
                self._cur.worker, self._cur.fluxion, self._cur.origin = worker, fluxion, origin
                t0 = time.perf_counter()
                try:
                    self.interp.call_value(cb, args)
                except FluxRuntimeError as exc:
                    self._dead_letter(fluxion, origin, exc, worker)
                finally:
                    self._interval(fluxion, worker, origin, t0)
        finally:
            self._cur.worker, self._cur.fluxion, self._cur.origin = prev

    def _process_message(self, message: Message, worker: int) -> None:
        flx = self.fluxions[message.dest]
        self._cur.worker, self._cur.fluxion, self._cur.origin = worker, message.dest, message.origin
        t0 = time.perf_counter()
        self._log(
            TraceEvent(t0, worker, message.dest, "receive", message.seq, message.origin, message.edge)
        )
        counts = self._invocations_by_worker[worker]
        counts[message.dest] = counts.get(message.dest, 0) + 1
        env = Environment(cells=self._store_for(flx, message.origin), ambient=self.ambient)
        env.vars.update(message.payload)
        try:
            self.interp.hoist(flx.body_stmts, env)
            self.interp.exec_statements(flx.body_stmts, env)
        except FluxRuntimeError as exc:
            self._dead_letter(message.dest, message.origin, exc, worker)
        finally:
            self._interval(message.dest, worker, message.origin, t0)

    def _dead_letter(self, fluxion: str, origin: int | None, exc: FluxRuntimeError, worker: int) -> None:
        with self._dead_lock:
            self.world.dead_letters.append({"fluxion": fluxion, "origin": origin, "error": str(exc)})
        self._log(TraceEvent(time.perf_counter(), worker, fluxion, "error", None, origin))

    def _interval(self, fluxion: str, worker: int, origin: int | None, start: float) -> None:
        self._intervals_by_worker[worker].append(ExecInterval(fluxion, worker, origin, start, time.perf_counter()))

    def run_until_idle(self, deadline: float = 30.0) -> Metrics:
        """Drive all workers until every queue is empty and nothing is in
        flight; raises DeadlineExceeded past the wall-clock budget."""
        start = time.perf_counter()
        if self.workers == 1:
            while self.step(0):
                if time.perf_counter() - start > deadline:
                    raise DeadlineExceeded(f"budget of {deadline}s exhausted")
        else:
            timed_out = threading.Event()

            def loop(w: int) -> None:
                while True:
                    if self.step(w):
                        continue
                    with self._pending_lock:
                        done = self._pending == 0
                    if done:
                        return
                    if time.perf_counter() - start > deadline:
                        timed_out.set()
                        return
                    if timed_out.is_set():
                        return
                    time.sleep(0.00005)

            threads = [threading.Thread(target=loop, args=(w,), daemon=True) for w in range(self.workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            if timed_out.is_set():
                raise DeadlineExceeded(f"budget of {deadline}s exhausted")
        return self.metrics(time.perf_counter() - start)

    # -- results --

    def context_snapshot(self) -> dict[str, dict[str, Any]]:
        out: dict[str, dict[str, Any]] = {}
        for fid, flx in self.fluxions.items():
            store = flx.group.store
            out[fid] = {slot: store.get(slot) for slot in flx.defn.context}
        return out

    def metrics(self, wall_time: float) -> Metrics:
        invocations = {fid: 0 for fid in self.fluxions}
        for counts in self._invocations_by_worker:
            for fid, n in counts.items():
                invocations[fid] += n
        trace = sorted((e for lane in self._trace_by_worker for e in lane), key=lambda e: e.ts)
        intervals = sorted(
            (iv for lane in self._intervals_by_worker for iv in lane), key=lambda iv: iv.start
        )
        return Metrics(
            wall_time=wall_time,
            invocations=invocations,
            responses=list(self.world.responses),
            dead_letters=list(self.world.dead_letters),
            intervals=intervals,
            trace=trace,
            contexts=self.context_snapshot(),
        )

    def write_trace(self, path: str) -> None:
        trace = sorted((e for lane in self._trace_by_worker for e in lane), key=lambda e: e.ts)
        with open(path, "w", encoding="utf-8") as fh:
            for e in trace:
                fh.write(
                    json.dumps(
                        {
                            "ts": e.ts,
                            "worker": e.worker,
                            "fluxion": e.fluxion,
                            "event": e.event,
                            "seq": e.seq,
                            "originId": e.origin,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )


def register(
    program: FlxProgram,
    workers: int = 1,
    virtual_files: dict[str, str] | None = None,
    replicate: bool = False,
) -> RuntimeState:
    """Register the fluxions in the messaging system and initialize them."""
    return RuntimeState(program, workers, virtual_files, replicate)
