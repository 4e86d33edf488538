"""Runtime value model shared by the sequential oracle and the parallel
runtime: numbers, strings, booleans, null, objects, arrays, closures and
opaque handles, plus the coercion helpers the evaluator uses."""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import FluxRuntimeError


@dataclass(eq=False)
class Closure:
    name: str | None
    params: list[str]
    body: Any  # ast.Block
    env: Any  # interpreter.Environment

    def __repr__(self) -> str:
        return f"<function {self.name or '(anonymous)'}>"


@dataclass(eq=False)
class Intrinsic:
    name: str
    fn: Callable[[list], Any]
    transferable: bool = False

    def __repr__(self) -> str:
        return f"<intrinsic {self.name}>"


@dataclass(eq=False)
class ResponseHandle:
    """Opaque per-request response token; transferable across workers."""

    origin_id: int
    recorder: Callable[[int, Any], None]
    _sent: bool = field(default=False)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def send(self, value: Any) -> None:
        with self._lock:
            if self._sent:
                raise FluxRuntimeError(f"response for request {self.origin_id} already sent")
            self._sent = True
        self.recorder(self.origin_id, value)

    def __repr__(self) -> str:
        return f"<response #{self.origin_id}>"


@dataclass(eq=False)
class ContinuationHandle:
    """Continuation installed by the listener dispatcher (``next``);
    transferable like a response handle."""

    name: str
    fn: Callable[[list], Any]

    def __repr__(self) -> str:
        return f"<continuation {self.name}>"


@dataclass(eq=False)
class StreamHandle:
    """A stream placeholder value: calling it sends a message on its edge."""

    fluxion_id: str
    kind: str  # 'start' | 'post'
    dests: tuple[str, ...]
    msg_names: tuple[str, ...]
    sender: Callable  # sender(handle, args, env) -> None
    env: Any  # environment the placeholder was evaluated in

    def __repr__(self) -> str:
        arrow = ">>" if self.kind == "start" else "->"
        return f"<stream {arrow} {', '.join(self.dests)}>"


def js_truthy(value: Any) -> bool:
    if value is None:
        return False
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return value != 0.0
    if isinstance(value, str):
        return value != ""
    return True


def js_str(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value == int(value) and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        return ",".join(js_str(v) for v in value)
    if isinstance(value, dict):
        return "[object Object]"
    return repr(value)


def js_eq(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, float) and isinstance(b, float):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    return a is b


def deep_copy_value(value: Any) -> Any:
    """Copy a value for a message payload.

    Immutable primitives pass through; objects and arrays copy deeply;
    response and continuation handles transfer by reference. Closures,
    stream handles and module intrinsics never cross a message boundary.
    """
    if value is None or isinstance(value, (bool, float, str)):
        return value
    if isinstance(value, (ResponseHandle, ContinuationHandle)):
        return value
    if isinstance(value, list):
        return [deep_copy_value(v) for v in value]
    if isinstance(value, dict):
        return {k: deep_copy_value(v) for k, v in value.items()}
    raise FluxRuntimeError(f"{value!r} cannot cross a message boundary")


def to_value(raw: Any) -> Any:
    """Normalize plain JSON data into the value model (ints become floats)."""
    if isinstance(raw, bool) or raw is None or isinstance(raw, (float, str)):
        return raw
    if isinstance(raw, int):
        return float(raw)
    if isinstance(raw, list):
        return [to_value(v) for v in raw]
    if isinstance(raw, dict):
        return {str(k): to_value(v) for k, v in raw.items()}
    raise ValueError(f"cannot convert {raw!r} to a runtime value")


_BUSY_BLOCK = b"\x5a" * (1 << 20)
_BUSY_VIEW = memoryview(_BUSY_BLOCK)


def busy_burn(amount: float) -> None:
    """CPU-bound spin hashing ``amount`` bytes; releases the GIL so workers
    overlap. Streaming over a buffer scales across SMT siblings much better
    than register-bound iterated hashing."""
    remaining = max(1, int(amount))
    h = hashlib.sha256()
    block = len(_BUSY_BLOCK)
    while remaining >= block:
        h.update(_BUSY_BLOCK)
        remaining -= block
    if remaining:
        h.update(_BUSY_VIEW[:remaining])
