"""JSON encodings of executions and extensional programs."""

from __future__ import annotations

import json
from typing import Mapping

from .program import Execution, ExtensionalProgram, executions_sorted
from .state_space import StateSpace, state_from_json, state_to_json, states_sorted


def execution_to_json(e: Execution) -> dict:
    return {"prefix": [state_to_json(s) for s in e.prefix], "cycle": [state_to_json(s) for s in e.cycle]}


def execution_from_json(obj: Mapping) -> Execution:
    return Execution([state_from_json(s) for s in obj["prefix"]], [state_from_json(s) for s in obj.get("cycle", [])])


def program_to_json(p: ExtensionalProgram) -> dict:
    out = {
        "space": p.base.to_json(),
        "table": [
            {"from": state_to_json(a), "executions": [execution_to_json(e) for e in executions_sorted(es)]}
            for a, es in p.table.items()
        ],
    }
    if p.unknown:
        out["unknown"] = [state_to_json(a) for a in states_sorted(p.unknown)]
    return out


def program_from_json(obj: Mapping) -> ExtensionalProgram:
    space = StateSpace.from_json(obj["space"])
    table = {}
    for row in obj["table"]:
        a = state_from_json(row["from"])
        table[a] = frozenset(execution_from_json(e) for e in row["executions"])
    unknown = frozenset(state_from_json(a) for a in obj.get("unknown", []))
    return ExtensionalProgram(space, table, unknown)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
