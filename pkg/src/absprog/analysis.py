"""Effect relations, problems, solution and equivalence checks.

Checks run against a *behaviour*: per start state, the set of final states,
whether some execution diverges, and whether exploration ran out of budget.
A behaviour comes either from an extensional program or straight from the
interpreter, so both views share one implementation of the verdict logic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .machine import Summary
from .program import ExtensionalProgram
from .state_space import (
    State,
    StateSpace,
    enumerate_states,
    format_state,
    parse_state_in_space,
    state_to_json,
    states_sorted,
)

DEFAULT_COUNTEREXAMPLE_LIMIT = 20


class AnalysisError(Exception):
    pass


class SpaceMismatch(AnalysisError):
    pass


@dataclass(frozen=True)
class EffectRelation:
    space: StateSpace
    graph: Mapping[State, frozenset]

    def __post_init__(self):
        object.__setattr__(
            self, "graph", {a: frozenset(bs) for a, bs in sorted(self.graph.items(), key=lambda kv: kv[0].sort_key)}
        )

    @property
    def domain(self) -> frozenset:
        return frozenset(self.graph)

    def __eq__(self, other):
        if not isinstance(other, EffectRelation):
            return NotImplemented
        return self.space == other.space and self.graph == other.graph

    def __hash__(self):
        return hash((self.space, frozenset(self.graph.items())))

    def __call__(self, a: State) -> frozenset:
        return self.graph[a]

    def rename(self, nu: Mapping[str, str]) -> EffectRelation:
        """Image under a base-variable renaming."""
        return EffectRelation(
            self.space.rename(nu),
            {a.rename(nu): frozenset(b.rename(nu) for b in bs) for a, bs in self.graph.items()},
        )

    def to_json(self, unknown: Iterable[State] = ()) -> dict:
        return {
            "space": self.space.to_json(),
            "domain": [state_to_json(a) for a in self.graph],
            "graph": [{"from": state_to_json(a), "to": [state_to_json(b) for b in states_sorted(bs)]}
                      for a, bs in self.graph.items()],
            "unknown": [state_to_json(a) for a in states_sorted(unknown)],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> tuple[EffectRelation, frozenset]:
        space = StateSpace.from_json(obj["space"])
        graph = {
            parse_state_in_space(row["from"], space): frozenset(parse_state_in_space(b, space) for b in row["to"])
            for row in obj["graph"]
        }
        domain = {parse_state_in_space(a, space) for a in obj.get("domain", [])}
        if domain and domain != set(graph):
            raise AnalysisError("effect domain does not match graph keys")
        unknown = frozenset(parse_state_in_space(a, space) for a in obj.get("unknown", []))
        return cls(space, graph), unknown


@dataclass(frozen=True)
class Problem:
    space: StateSpace
    graph: Mapping[State, frozenset]

    def __post_init__(self):
        graph = {a: frozenset(bs) for a, bs in self.graph.items() if bs}
        for a, bs in graph.items():
            if not self.space.contains_state(a) or not all(self.space.contains_state(b) for b in bs):
                raise AnalysisError(f"problem pair at {format_state(a)} leaves the state space")
        object.__setattr__(self, "graph", dict(sorted(graph.items(), key=lambda kv: kv[0].sort_key)))

    @property
    def domain(self) -> frozenset:
        return frozenset(self.graph)

    @classmethod
    def from_pairs(cls, space: StateSpace, pairs: Iterable[tuple[State, State]]) -> Problem:
        graph: dict[State, set] = {}
        for a, b in pairs:
            graph.setdefault(a, set()).add(b)
        return cls(space, graph)

    @classmethod
    def from_condition(cls, space: StateSpace, pre: str, post: str) -> Problem:
        """Expand a pre/postcondition pair; ``x'`` in ``post`` is x after the run."""
        from .checker import free_vars
        from .machine import compile_expr
        from .parser import parse_expr

        pre_e = _resolve_labels(parse_expr(pre), space)
        post_e = _resolve_labels(parse_expr(post, allow_primes=True), space)
        pre_f, post_f = compile_expr(pre_e), compile_expr(post_e)
        used = free_vars(post_e)
        before = [n for n in space if n in used]
        after = [n for n in space if n + "'" in used]
        states = list(enumerate_states(space))
        # the postcondition only sees the variables it mentions, so evaluate
        # it once per combination of those and share the resulting images
        groups: dict[tuple, list] = {}
        for b in states:
            groups.setdefault(tuple(b[n] for n in after), []).append(b)
        images: dict[tuple, frozenset] = {}
        graph = {}
        for a in states:
            if not pre_f(a.__getitem__):
                continue
            key = tuple(a[n] for n in before)
            if key not in images:
                env = dict(zip(before, key))
                image = []
                for values, bs in groups.items():
                    env.update(zip((n + "'" for n in after), values))
                    if post_f(env.__getitem__):
                        image.extend(bs)
                images[key] = frozenset(image)
            if images[key]:
                graph[a] = images[key]
        return cls(space, graph)

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "pairs": [[state_to_json(a), state_to_json(b)] for a, bs in self.graph.items() for b in states_sorted(bs)],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> Problem:
        space = StateSpace.from_json(obj["space"])
        if "pairs" in obj:
            return cls.from_pairs(
                space, [(parse_state_in_space(a, space), parse_state_in_space(b, space)) for a, b in obj["pairs"]]
            )
        return cls.from_condition(space, obj.get("pre", "true"), obj["post"])


def _resolve_labels(e, space: StateSpace):
    from .syntax import BinOp, CallExpr, EnumLit, UnOp, Var

    labels = {label for d in space.values() if d.kind == "enum" for label in d.labels}
    names = set(space) | {n + "'" for n in space}

    def go(e):
        if isinstance(e, Var):
            if e.name in names:
                return e
            if e.name in labels:
                return EnumLit(e.name)
            raise AnalysisError(f"unknown name {e.name} in condition")
        if isinstance(e, UnOp):
            return UnOp(e.op, go(e.operand))
        if isinstance(e, BinOp):
            return BinOp(e.op, go(e.left), go(e.right))
        if isinstance(e, CallExpr):
            raise AnalysisError("conditions cannot call subprograms")
        return e

    return go(e)


# -- behaviours -------------------------------------------------------------------


@dataclass(frozen=True)
class Behaviour:
    """Per-start-state summaries over a base space."""

    space: StateSpace
    summaries: Mapping[State, Summary]

    @property
    def unknown(self) -> frozenset:
        return frozenset(a for a, s in self.summaries.items() if s.exhausted)


def behaviour_of(p) -> Behaviour:
    if isinstance(p, Behaviour):
        return p
    if isinstance(p, ExtensionalProgram):
        sums = {}
        for a, es in p.table.items():
            sums[a] = Summary(
                frozenset(e.last for e in es if e.finite),
                any(not e.finite for e in es),
                a in p.unknown,
            )
        return Behaviour(p.base, sums)
    raise TypeError(f"cannot analyse {type(p).__name__}")


def effect(p) -> tuple[EffectRelation, frozenset]:
    """The effect relation and the start states left undecided by budgets."""
    b = behaviour_of(p)
    graph = {a: s.finals for a, s in b.summaries.items() if not s.exhausted and not s.diverges and s.finals}
    return EffectRelation(b.space, graph), b.unknown


# -- verdicts ---------------------------------------------------------------------


@dataclass(frozen=True)
class Holds:
    kind = "holds"
    exit_code = 0


@dataclass(frozen=True)
class Fails:
    counterexamples: tuple  # of (State, reason)
    total: int = 0
    kind = "fails"
    exit_code = 1

    def __post_init__(self):
        if not self.counterexamples:
            raise AnalysisError("Fails needs at least one counterexample")
        if self.total < len(self.counterexamples):
            object.__setattr__(self, "total", len(self.counterexamples))


@dataclass(frozen=True)
class Unknown:
    states: tuple
    kind = "unknown"
    exit_code = 2

    def __post_init__(self):
        if not self.states:
            raise AnalysisError("Unknown needs at least one state")


Verdict = Holds | Fails | Unknown


def _verdict(failures: list, unknown: list, limit: int) -> Verdict:
    if failures:
        return Fails(tuple(failures[:limit]), len(failures))
    if unknown:
        return Unknown(tuple(states_sorted(unknown)))
    return Holds()


def format_verdict(v: Verdict) -> str:
    if isinstance(v, Holds):
        return "holds"
    if isinstance(v, Unknown):
        return f"unknown: budget exhausted at {len(v.states)} state(s): " + ", ".join(
            format_state(a) for a in v.states[:DEFAULT_COUNTEREXAMPLE_LIMIT]
        )
    lines = [f"fails at {v.total} state(s)"]
    lines += [f"  {format_state(a)}: {reason}" for a, reason in v.counterexamples]
    if v.total > len(v.counterexamples):
        lines.append(f"  ... {v.total - len(v.counterexamples)} more")
    return "\n".join(lines)


def verdict_to_json(v: Verdict) -> dict:
    if isinstance(v, Holds):
        return {"verdict": "holds"}
    if isinstance(v, Unknown):
        return {"verdict": "unknown", "states": [state_to_json(a) for a in v.states]}
    return {
        "verdict": "fails",
        "total": v.total,
        "counterexamples": [{"state": state_to_json(a), "reason": r} for a, r in v.counterexamples],
    }


def solves(f: Problem, p, limit: int = DEFAULT_COUNTEREXAMPLE_LIMIT) -> Verdict:
    """Does ``p`` solve ``f``?  Budget-exhausted states make the answer Unknown
    unless a definite failure is already visible."""
    b = behaviour_of(p)
    if f.space != b.space:
        raise SpaceMismatch(
            f"problem space {f.space!r} differs from program base {b.space!r}; transform the program first"
        )
    failures, unknown = [], []
    for a, allowed in f.graph.items():
        s = b.summaries.get(a)
        if s is None:
            unknown.append(a)
            continue
        bad = False
        if s.diverges:
            failures.append((a, "diverges"))
            bad = True
        for out in states_sorted(s.finals - allowed):
            failures.append((a, f"produces {format_state(out)}, not allowed"))
            bad = True
        if not bad and s.exhausted:
            unknown.append(a)
    return _verdict(failures, unknown, limit)


def _definitely_differ(x: Summary, y: Summary) -> bool:
    # y is exhausted, x is complete
    if x.diverges:
        return False
    return y.diverges or not y.finals <= x.finals


def equivalent(p, q, limit: int = DEFAULT_COUNTEREXAMPLE_LIMIT) -> Verdict:
    """Equal effects over the common base space."""
    bp, bq = behaviour_of(p), behaviour_of(q)
    if bp.space != bq.space:
        raise SpaceMismatch(f"base spaces differ: {bp.space!r} vs {bq.space!r}")
    failures, unknown = [], []
    for a in enumerate_states(bp.space):
        x, y = bp.summaries.get(a), bq.summaries.get(a)
        if x is None or y is None:
            unknown.append(a)
            continue
        if x.exhausted or y.exhausted:
            if x.exhausted and y.exhausted:
                unknown.append(a)
            elif _definitely_differ(x, y) if y.exhausted else _definitely_differ(y, x):
                failures.append((a, "effects differ"))
            else:
                unknown.append(a)
            continue
        if x.diverges != y.diverges:
            side = "first" if x.diverges else "second"
            failures.append((a, f"only the {side} program may diverge"))
        elif not x.diverges and x.finals != y.finals:
            failures.append((a, "final states differ"))
    return _verdict(failures, unknown, limit)


def solves_via_transform(f: Problem, p, steps: Sequence, limit: int = DEFAULT_COUNTEREXAMPLE_LIMIT):
    """Transform ``p`` (extensional, or a parsed program) then check ``solves``.

    Returns ``(verdict, transformed base space)``.
    """
    from .machine import to_extensional
    from .syntax import Program
    from .transforms import apply_steps

    if isinstance(p, Program):
        p = to_extensional(p)
    q = apply_steps(p, steps)
    return solves(f, q, limit), q.base
