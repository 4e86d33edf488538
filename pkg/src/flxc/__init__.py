"""flxc: compiles event-loop MiniJS programs into networks of independent
message-passing fluxions, runs them on parallel workers, and checks the
result against a sequential event-loop oracle."""

from .analyzer import (
    AsyncCallee,
    PipelineRepr,
    Resolved,
    RupturePoint,
    Unresolvable,
    analyze,
    build_pipeline,
    default_async_callees,
    detect_rupture_points,
    resolve_callback,
)
from .check import CheckReport, run_check
from .flx_format import emit_flx, flx_equal, parse_flx
from .parser import parse
from .pipeliner import (
    CompileResult,
    FluxionDef,
    FlxProgram,
    Placement,
    StreamDecl,
    assign_groups,
    build_fluxions,
    classify_variable,
    compile_program,
    compile_source,
    placement_report,
)
from .printer import emit_source
from .reference import ObservedOutputs, run_sequential
from .runtime import Metrics, RuntimeState, register
from .scopes import ScopeGraph, build_scope_graph, captures

__version__ = "0.1.0"

__all__ = [
    "AsyncCallee",
    "CheckReport",
    "CompileResult",
    "FluxionDef",
    "FlxProgram",
    "Metrics",
    "ObservedOutputs",
    "PipelineRepr",
    "Placement",
    "Resolved",
    "RuntimeState",
    "RupturePoint",
    "ScopeGraph",
    "StreamDecl",
    "Unresolvable",
    "analyze",
    "assign_groups",
    "build_fluxions",
    "build_pipeline",
    "build_scope_graph",
    "captures",
    "classify_variable",
    "compile_program",
    "compile_source",
    "default_async_callees",
    "detect_rupture_points",
    "emit_flx",
    "emit_source",
    "flx_equal",
    "parse",
    "parse_flx",
    "placement_report",
    "register",
    "resolve_callback",
    "run_check",
    "run_sequential",
]
