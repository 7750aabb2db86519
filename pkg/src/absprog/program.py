"""Executions, extensional programs and their well-formedness check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .state_space import (
    State,
    StateSpace,
    enumerate_states,
    format_state,
    sequence_key,
    states_sorted,
)


class ProgramError(Exception):
    pass


class UnknownState(ProgramError):
    pass


def _minimal_period(cycle: tuple) -> tuple:
    n = len(cycle)
    for p in range(1, n + 1):
        if n % p == 0 and cycle[:p] * (n // p) == cycle:
            return cycle[:p]
    return cycle


class Execution:
    """A nonempty state sequence, finite or an infinite lasso.

    An infinite execution is ``prefix`` followed by ``cycle`` repeated
    forever.  Lassos are kept in normal form: the cycle has minimal period
    and the prefix is as short as possible while keeping at least one state,
    so two lassos denote the same sequence iff they are equal.
    """

    __slots__ = ("prefix", "cycle", "_hash")

    def __init__(self, prefix: Iterable[State], cycle: Iterable[State] = ()):
        prefix = tuple(prefix)
        cycle = tuple(cycle)
        if cycle:
            cycle = _minimal_period(cycle)
            while len(prefix) > 1 and prefix[-1] == cycle[-1]:
                prefix = prefix[:-1]
                cycle = (cycle[-1],) + cycle[:-1]
        self.prefix = prefix
        self.cycle = cycle
        self._hash = hash((prefix, cycle))

    @classmethod
    def lasso(cls, prefix, cycle) -> Execution:
        if not cycle:
            raise ProgramError("a lasso needs a nonempty cycle")
        return cls(prefix, cycle)

    def __eq__(self, other):
        if isinstance(other, Execution):
            return self._hash == other._hash and self.prefix == other.prefix and self.cycle == other.cycle
        return NotImplemented

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return (Execution, (self.prefix, self.cycle))

    @property
    def finite(self) -> bool:
        return not self.cycle

    def __len__(self):
        if self.cycle:
            raise ProgramError("infinite execution has no finite length; use length()")
        return len(self.prefix)

    @property
    def first(self) -> State:
        return self.prefix[0]

    @property
    def last(self) -> State:
        if self.cycle:
            raise ProgramError("infinite execution has no last state")
        return self.prefix[-1]

    def states(self) -> tuple[State, ...]:
        """Every distinct position of the finite representation."""
        return self.prefix + self.cycle

    def at(self, i: int) -> State:
        """State at 1-based position ``i``."""
        if i < 1:
            raise IndexError(i)
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        if not self.cycle:
            raise IndexError(i)
        return self.cycle[(i - len(self.prefix) - 1) % len(self.cycle)]

    def map_states(self, f: Callable[[State], State]) -> Execution:
        return Execution([f(s) for s in self.prefix], [f(s) for s in self.cycle])

    @property
    def sort_key(self):
        return (bool(self.cycle), sequence_key(self.prefix), sequence_key(self.cycle))

    def __repr__(self):
        return format_execution(self)


def is_finite(e: Execution) -> bool:
    return e.finite


def length(e: Execution) -> float | int:
    return len(e.prefix) if e.finite else math.inf


def format_execution(e: Execution) -> str:
    text = "⟨" + ", ".join(format_state(s) for s in e.prefix) + "⟩"
    if e.cycle:
        text += " (cycle: " + ", ".join(format_state(s) for s in e.cycle) + ")*"
    return text


def executions_sorted(execs: Iterable[Execution]) -> list[Execution]:
    return sorted(execs, key=lambda e: e.sort_key)


@dataclass(frozen=True)
class ExtensionalProgram:
    """A program given as a table: base state -> set of executions.

    ``unknown`` lists start states whose exploration ran out of budget; their
    table entry holds only the executions found before that happened.
    """

    base: StateSpace
    table: Mapping[State, frozenset[Execution]]
    unknown: frozenset[State] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(
            self, "table", {a: frozenset(es) for a, es in sorted(self.table.items(), key=lambda kv: kv[0].sort_key)}
        )
        object.__setattr__(self, "unknown", frozenset(self.unknown))

    def __eq__(self, other):
        if not isinstance(other, ExtensionalProgram):
            return NotImplemented
        return self.base == other.base and self.table == other.table and self.unknown == other.unknown

    def __hash__(self):
        return hash((self.base, frozenset(self.table.items()), self.unknown))

    @property
    def partial(self) -> bool:
        return bool(self.unknown)

    def starts(self) -> list[State]:
        return list(self.table)

    def items(self):
        for a, es in self.table.items():
            yield a, executions_sorted(es)

    def auxiliary_names(self) -> set[str]:
        names = set()
        for es in self.table.values():
            for e in es:
                for s in e.states():
                    names.update(s)
        return names - set(self.base)


def executions_from(p: ExtensionalProgram, a: State) -> frozenset[Execution]:
    if a not in p.table:
        if not p.base.contains_state(a):
            raise UnknownState(f"{format_state(a)} is not a state of the base space")
        raise UnknownState(f"{format_state(a)} has no entry in the program table")
    return p.table[a]


def from_function(base: StateSpace, f: Callable[[State], Iterable[Execution]]) -> ExtensionalProgram:
    return ExtensionalProgram(base, {a: frozenset(f(a)) for a in enumerate_states(base)})


def skip_program(base: StateSpace) -> ExtensionalProgram:
    return from_function(base, lambda a: [Execution([a])])


@dataclass(frozen=True)
class Violation:
    condition: int  # 1..3 for the three program conditions; 0 for states outside the extended space
    kind: str
    state: State | None
    detail: str

    def __str__(self):
        where = f" at {format_state(self.state)}" if self.state is not None else ""
        return f"condition {self.condition} ({self.kind}){where}: {self.detail}"


def validate_program(p: ExtensionalProgram) -> list[Violation]:
    """Check the three program conditions; an empty list means OK."""
    out: list[Violation] = []
    base = p.base
    starts = set(p.table)
    for a in enumerate_states(base):
        if a not in starts:
            out.append(Violation(1, "missing-start-state", a, "no executions start here"))
        elif not p.table[a] and a not in p.unknown:
            out.append(Violation(1, "empty-execution-set", a, "at least one execution must start here"))
    for a in states_sorted(starts):
        if not base.contains_state(a):
            out.append(Violation(1, "extra-start-state", a, "key is not a state of the base space"))
            continue
        for e in executions_sorted(p.table[a]):
            if not e.prefix:
                out.append(Violation(3, "empty-execution", a, "execution has no states"))
                continue
            if e.first != a:
                out.append(Violation(3, "wrong-first-state", a, f"execution starts at {format_state(e.first)}"))
            if e.finite and not base.contains_state(e.last):
                out.append(
                    Violation(2, "final-state-outside-base", a, f"finite execution ends in {format_state(e.last)}")
                )
            for s in e.states():
                if not base.contains_superstate(s):
                    out.append(
                        Violation(0, "state-outside-extended-space", a, f"{format_state(s)} lacks base components")
                    )
                    break
    return out
