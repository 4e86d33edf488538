"""Compile a program, execute it both ways, and diff the observable outputs.

Equivalence means: the multiset of (request, response) pairs matches and
every request sees its responses in the same order in both executions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

from .analyzer import AsyncCallee
from .parser import parse
from .pipeliner import CompileResult, compile_program, placement_report
from .reference import ObservedOutputs, run_sequential
from .runtime import Metrics, register


def jsonable(value: Any) -> Any:
    """Canonical JSON form of a runtime value (integral floats as ints)."""
    if isinstance(value, float) and value == int(value) and abs(value) < 1e15:
        return int(value)
    if isinstance(value, list):
        return [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if value is None or isinstance(value, (bool, float, str)):
        return value
    return repr(value)


def by_origin(responses: list[tuple[int, Any]]) -> dict[int, list[Any]]:
    out: dict[int, list[Any]] = {}
    for origin, value in responses:
        out.setdefault(origin, []).append(value)
    return out


def compare_outputs(
    reference: list[tuple[int, Any]], actual: list[tuple[int, Any]]
) -> list[dict]:
    """Per-origin mismatches between the oracle and the runtime."""
    want = by_origin(reference)
    got = by_origin(actual)
    mismatches = []
    for origin in sorted(set(want) | set(got)):
        expected = [jsonable(v) for v in want.get(origin, [])]
        found = [jsonable(v) for v in got.get(origin, [])]
        if expected != found:
            mismatches.append({"originId": origin, "expected": expected, "actual": found})
    return mismatches


@dataclass(eq=False)
class CheckReport:
    equivalent: bool
    mismatches: list[dict]
    placements: dict
    timings: dict[str, float]
    workers: int
    requests: int
    reference: ObservedOutputs | None = None
    runtime: Metrics | None = None
    compile_result: CompileResult | None = None
    dead_letters: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "deadLetters": dict(self.dead_letters),
            "equivalent": self.equivalent,
            "mismatches": self.mismatches,
            "placements": self.placements,
            "requests": self.requests,
            "timings": self.timings,
            "workers": self.workers,
        }


def run_check(
    source: str,
    workload: list[dict],
    workers: int,
    callees: list[AsyncCallee] | None = None,
    virtual_files: dict[str, str] | None = None,
    replicate: bool = False,
    deadline: float = 30.0,
) -> CheckReport:
    t0 = time.perf_counter()
    program = parse(source)
    result = compile_program(program, callees)
    t_compile = time.perf_counter()

    reference = run_sequential(parse(source), workload, virtual_files)
    t_reference = time.perf_counter()

    state = register(result.flx, workers=workers, virtual_files=virtual_files, replicate=replicate)
    for request in workload:
        state.inject_request(request["path"], request.get("body"))
    metrics = state.run_until_idle(deadline=deadline)
    t_runtime = time.perf_counter()

    mismatches = compare_outputs(reference.responses, metrics.responses)
    return CheckReport(
        equivalent=not mismatches,
        mismatches=mismatches,
        placements=placement_report(result),
        timings={
            "compileMs": round((t_compile - t0) * 1000, 3),
            "referenceMs": round((t_reference - t_compile) * 1000, 3),
            "runtimeMs": round((t_runtime - t_reference) * 1000, 3),
        },
        workers=workers,
        requests=len(workload),
        reference=reference,
        runtime=metrics,
        compile_result=result,
        dead_letters={
            "reference": len(reference.dead_letters),
            "runtime": len(metrics.dead_letters),
        },
    )
