"""Base-space transformations of extensional programs.

Renaming relabels base and auxiliary variables, extension adds a base
component, restriction demotes base components to auxiliaries.  None of
them changes what the program does; two programs are *identical* when a
sequence of such steps on each side makes them equal, which is checked here
against an explicit witness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .program import Execution, ExtensionalProgram, ProgramError
from .state_space import (
    Domain,
    State,
    StateSpace,
    StateSpaceError,
    check_renaming,
    enumerate_states,
    fresh_name,
    is_subspace,
    project,
)


class TransformError(ProgramError):
    pass


class NameCollision(TransformError):
    pass


class IncompleteAuxiliaryMap(TransformError):
    pass


class VariableAlreadyInBase(TransformError):
    pass


class AuxiliaryDomainMismatch(TransformError):
    pass


class NotASubspace(TransformError):
    pass


class InapplicableStep(TransformError):
    def __init__(self, side: str, index: int, reason: str):
        super().__init__(f"{side} step {index}: {reason}")
        self.side = side
        self.index = index
        self.reason = reason


def default_aux_renaming(p: ExtensionalProgram, nu: Mapping[str, str]) -> dict[str, str]:
    """Identity on auxiliaries, except those clashing with a new base name."""
    targets = set(nu.values())
    aux = sorted(p.auxiliary_names())
    taken = targets | set(aux)
    mu = {}
    for k in aux:
        if k in targets:
            new = fresh_name(k, taken)
            taken.add(new)
            mu[k] = new
        else:
            mu[k] = k
    return mu


def rename(p: ExtensionalProgram, nu: Mapping[str, str], mu: Mapping[str, str] | None = None) -> ExtensionalProgram:
    nu = check_renaming(nu)
    if set(nu) != set(p.base):
        raise TransformError(f"base renaming must cover exactly {sorted(p.base)}, got {sorted(nu)}")
    aux = p.auxiliary_names()
    mu = default_aux_renaming(p, nu) if mu is None else check_renaming(mu)
    missing = aux - set(mu)
    if missing:
        raise IncompleteAuxiliaryMap(f"auxiliary variables {sorted(missing)} have no new name")
    mu = {k: v for k, v in mu.items() if k in aux}
    clash = set(nu.values()) & set(mu.values())
    if clash:
        raise NameCollision(f"{sorted(clash)} would name both a base and an auxiliary variable")
    full = {**mu, **nu}

    def ren(s: State) -> State:
        return s.rename(full)

    table = {ren(a): frozenset(e.map_states(ren) for e in es) for a, es in p.table.items()}
    return ExtensionalProgram(p.base.rename(nu), table, frozenset(ren(a) for a in p.unknown))


def _extend_execution(alpha: Execution, c: State, k: str) -> Execution:
    def step(prev: State, cur: State) -> State:
        if k in cur:
            return cur
        return cur.set(k, prev[k])

    prefix = [c]
    for s in alpha.prefix[1:]:
        prefix.append(step(prefix[-1], s))
    if alpha.finite:
        return Execution(prefix)
    # Thread k through the cycle until the value carried into it repeats.
    seen: dict = {}
    passes: list[list[State]] = []
    carry = prefix[-1]
    while True:
        entry = carry[k]
        if entry in seen:
            break
        seen[entry] = len(passes)
        states = []
        for s in alpha.cycle:
            carry = step(carry, s)
            states.append(carry)
        passes.append(states)
    j = seen[carry[k]]
    for states in passes[:j]:
        prefix.extend(states)
    cycle = [s for states in passes[j:] for s in states]
    return Execution(prefix, cycle)


def extend(p: ExtensionalProgram, k: str, d: Domain) -> ExtensionalProgram:
    if k in p.base:
        raise VariableAlreadyInBase(f"{k} is already a base variable")
    for es in p.table.values():
        for e in es:
            for s in e.states():
                if k in s and s[k] not in d:
                    raise AuxiliaryDomainMismatch(f"auxiliary {k} takes value {s[k]!r} outside {d}")
    base = p.base
    new_base = base.add(k, d)
    table = {}
    unknown = set()
    for c in enumerate_states(new_base):
        a = project(c, base)
        table[c] = frozenset(_extend_execution(alpha, c, k) for alpha in p.table.get(a, ()))
        if a in p.unknown:
            unknown.add(c)
    return ExtensionalProgram(new_base, table, frozenset(unknown))


def extend_to(p: ExtensionalProgram, space: StateSpace) -> ExtensionalProgram:
    """Extend onto a superspace, one missing variable at a time in name order."""
    if not is_subspace(p.base, space):
        raise NotASubspace("base space is not a subspace of the target")
    for name in sorted(set(space) - set(p.base)):
        p = extend(p, name, space[name])
    return p


def restrict(p: ExtensionalProgram, sub: StateSpace) -> ExtensionalProgram:
    if not is_subspace(sub, p.base):
        raise NotASubspace(f"{sub!r} is not a subspace of {p.base!r}")
    table: dict[State, set[Execution]] = {c: set() for c in enumerate_states(sub)}
    unknown = set()
    for a, es in p.table.items():
        c = project(a, sub)
        if a in p.unknown:
            unknown.add(c)
        for alpha in es:
            if alpha.finite:
                table[c].add(Execution((c,) + alpha.prefix + (project(alpha.last, sub),)))
            else:
                table[c].add(Execution((c,) + alpha.prefix, alpha.cycle))
    return ExtensionalProgram(sub, {c: frozenset(es) for c, es in table.items()}, frozenset(unknown))


@dataclass(frozen=True)
class Rename:
    base: Mapping[str, str]
    aux: Mapping[str, str] | None = None

    def __hash__(self):
        return hash((tuple(sorted(self.base.items())), None if self.aux is None else tuple(sorted(self.aux.items()))))


@dataclass(frozen=True)
class Extend:
    var: str
    domain: Domain


@dataclass(frozen=True)
class Restrict:
    space: StateSpace


TransformStep = Union[Rename, Extend, Restrict]


@dataclass(frozen=True)
class IdentityWitness:
    left: Sequence[TransformStep] = ()
    right: Sequence[TransformStep] = ()


def apply_step(p: ExtensionalProgram, step: TransformStep) -> ExtensionalProgram:
    """Apply one step.  Rename steps may be partial: unmentioned base names
    keep their name and unmentioned auxiliaries get the default renaming."""
    if isinstance(step, Rename):
        nu = {n: n for n in p.base}
        nu.update(step.base)
        mu = default_aux_renaming(p, nu)
        mu.update(step.aux or {})
        return rename(p, nu, mu)
    if isinstance(step, Extend):
        return extend(p, step.var, step.domain)
    if isinstance(step, Restrict):
        return restrict(p, step.space)
    raise TransformError(f"unknown transform step {step!r}")


def apply_steps(p: ExtensionalProgram, steps: Sequence[TransformStep], side: str = "left") -> ExtensionalProgram:
    for i, step in enumerate(steps):
        try:
            p = apply_step(p, step)
        except (TransformError, StateSpaceError) as exc:
            raise InapplicableStep(side, i, str(exc)) from exc
    return p


def check_identical(p: ExtensionalProgram, q: ExtensionalProgram, witness: IdentityWitness) -> bool:
    return apply_steps(p, witness.left, "left") == apply_steps(q, witness.right, "right")


def step_to_json(step: TransformStep) -> dict:
    if isinstance(step, Rename):
        return {"op": "rename", "base": dict(step.base), "aux": dict(step.aux or {})}
    if isinstance(step, Extend):
        return {"op": "extend", "var": step.var, "domain": step.domain.to_json()}
    return {"op": "restrict", "space": step.space.to_json()}


def step_from_json(obj: Mapping) -> TransformStep:
    op = obj.get("op")
    if op == "rename":
        aux = obj.get("aux")
        return Rename(dict(obj["base"]), dict(aux) if aux else None)
    if op == "extend":
        return Extend(obj["var"], Domain.from_json(obj["domain"]))
    if op == "restrict":
        return Restrict(StateSpace.from_json(obj["space"]))
    raise TransformError(f"unknown transform op {op!r}")


def witness_from_json(obj) -> IdentityWitness:
    if isinstance(obj, list):
        return IdentityWitness([step_from_json(s) for s in obj], ())
    return IdentityWitness(
        [step_from_json(s) for s in obj.get("left", [])],
        [step_from_json(s) for s in obj.get("right", [])],
    )


def witness_to_json(w: IdentityWitness) -> dict:
    return {"left": [step_to_json(s) for s in w.left], "right": [step_to_json(s) for s in w.right]}
