"""Randomized MiniJS program generator for property testing.

Programs are built from patterns whose sequential and fluxional executions
must agree: globals written past the initial stage are confined to one
route's chain (the share grouping then serializes them in enqueue order,
which matches the sequential FIFO), read-only globals stream freely,
chain-locals are declared at stage roots and read only downstream, and
each request sends exactly one response from its leaf stage.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass
class Generated:
    seed: int
    source: str
    workload: list[dict]
    ruptures: int  # rupture points with statically resolvable callbacks
    variables: int


def _expr(rng: random.Random, atoms: list[str]) -> str:
    terms = [rng.choice(atoms) for _ in range(rng.randint(1, 3))]
    return " + ".join(terms)


def generate(seed: int) -> Generated:
    rng = random.Random(seed)
    header: list[str] = ["var app = require('express')();"]

    n_globals = rng.randint(1, 3)
    globals_all = [f"g{i}" for i in range(n_globals)]
    for g in globals_all:
        header.append(f"var {g} = {rng.randint(0, 9)};")

    n_routes = rng.choice([0, 1, 1, 1, 1, 1, 2, 2])
    writable: dict[str, int] = {}
    for g in globals_all:
        if n_routes and rng.random() < 0.6:
            writable[g] = rng.randrange(n_routes)

    uses_inner_cb = rng.random() < 0.3
    if uses_inner_cb:
        header.insert(1, "var fs = require('fs');")
        target = globals_all[0]
        header.append(
            f"var mk = function() {{ return function(e, d) {{ {target} += 1; }}; }};"
        )
        header.append("fs.readFile('main.mjs-mini', mk());")

    remaining = 3
    depths: list[int] = []
    for r in range(n_routes):
        routes_left = n_routes - r - 1
        d = rng.randint(1, max(1, min(3, remaining - routes_left)))
        depths.append(d)
        remaining -= d

    state = {"variables": n_globals, "ruptures": 0}
    body: list[str] = []
    workload: list[dict] = []

    for r, depth in enumerate(depths):
        state["ruptures"] += depth
        owned = [g for g, owner in writable.items() if owner == r]
        streams: list[str] = []

        # a route may read only globals nobody else writes, plus its own
        visible_globals = [g for g in globals_all if g not in writable or writable[g] == r]

        def stage(j: int, indent: str) -> list[str]:
            """Statements of stage j plus, below the leaf, the next rupture."""
            out: list[str] = []
            atoms = [str(rng.randint(1, 5))] + visible_globals + list(streams)
            atoms.append("req.body" if j == 0 else f"v{r}{j}")
            for g in owned:
                if rng.random() < 0.6:
                    out.append(f"{indent}{g} += {rng.randint(1, 3)};")
                if rng.random() < 0.2:
                    out.append(f"{indent}if ({g} == {rng.randint(0, 4)}) {{")
                    out.append(f"{indent}  {g} += 1;")
                    out.append(f"{indent}}} else {{")
                    out.append(f"{indent}  {g} += 2;")
                    out.append(f"{indent}}}")
            if rng.random() < 0.7 and j < depth:
                name = f"l{r}{j}"
                out.append(f"{indent}var {name} = {_expr(rng, atoms)};")
                streams.append(name)
                state["variables"] += 1
            if j == depth:
                out.append(f"{indent}res.send(template({_expr(rng, atoms)}, 'r{r}'));")
            else:
                params = f"v{r}{j + 1}"
                fname = "" if rng.random() < 0.25 else f" h{r}{j + 1}"
                inner = stage(j + 1, indent + "  ")
                if fname and rng.random() < 0.3:
                    # walk-back form: bind the callback, then pass its name
                    out.append(f"{indent}var cb{r}{j} = function{fname}({params}) {{")
                    out.extend(inner)
                    out.append(f"{indent}}};")
                    out.append(f"{indent}timer.delay({j + 1}, cb{r}{j});")
                else:
                    out.append(f"{indent}timer.delay({j + 1}, function{fname}({params}) {{")
                    out.extend(inner)
                    out.append(f"{indent}}});")
            return out

        fname = "" if rng.random() < 0.25 else f" h{r}0"
        body.append(f"app.get('/r{r}', function{fname}(req, res) {{")
        body.extend(stage(0, "  "))
        body.append("});")

        for _ in range(rng.randint(2, 5)):
            workload.append({"path": f"/r{r}", "body": rng.randint(1, 99)})

    lines = header + body + ["app.listen(8080);"]
    rng.shuffle(workload)
    return Generated(seed, "\n".join(lines) + "\n", workload, state["ruptures"], state["variables"])
