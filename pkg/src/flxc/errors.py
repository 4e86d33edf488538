"""Error types shared across the compiler and the runtimes."""

from __future__ import annotations


class FlxError(Exception):
    """Base class for every error raised by this package."""


class LexError(FlxError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"lex error at {line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class ParseError(FlxError):
    def __init__(self, message: str, line: int, col: int, expected: str | None = None, found: str | None = None):
        super().__init__(f"parse error at {line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found


class CompileError(FlxError):
    """Raised when the analyzer or pipeliner rejects a program."""


class DuplicateCallbackUse(CompileError):
    """One function is the callback of two different rupture points."""


class CyclicPipeline(CompileError):
    """A callback function is reachable from itself through the stage graph."""


class NameCollision(CompileError):
    """Two distinct bindings would occupy the same slot name in one group."""


class UnsupportedClosureTransfer(CompileError):
    """A function value escapes its stage other than as a rupture callback."""


class FlxSyntaxError(FlxError):
    def __init__(self, message: str, line: int):
        super().__init__(f"flx syntax error at line {line}: {message}")
        self.message = message
        self.line = line


class FlxLinkError(FlxError):
    """A stream declaration names a fluxion that does not exist."""


class EmptyProgram(FlxError):
    """The runtime was given a program with no fluxions."""


class NoRouteError(FlxError):
    """A request was injected for a path with no installed listener."""


class FluxRuntimeError(FlxError):
    """An evaluation error inside a fluxion body or a sequential callback."""

    def __init__(self, message: str, fluxion: str | None = None, span=None):
        loc = f" in {fluxion}" if fluxion else ""
        super().__init__(f"runtime error{loc}: {message}")
        self.message = message
        self.fluxion = fluxion
        self.span = span


class DeadlineExceeded(FlxError):
    """run_until_idle exhausted its wall-clock budget."""
