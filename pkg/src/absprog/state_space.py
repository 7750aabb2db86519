"""Finite direct-product state spaces, states, and projections.

A state space maps variable names to finite value domains.  A state is a
total assignment over some set of names; an *extended* state binds every
variable of a base space plus possibly some auxiliary ones.  Both are
represented by :class:`State`, which is just an immutable name -> value map.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

DEFAULT_ENUMERATION_BUDGET = 2**20

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

Value = bool | int | str


class StateSpaceError(Exception):
    pass


class BudgetExceeded(StateSpaceError):
    """The number of states to enumerate exceeds the configured budget."""


class NotASuperstate(StateSpaceError):
    pass


def check_name(name: str) -> str:
    if not isinstance(name, str) or not _IDENT.match(name):
        raise StateSpaceError(f"invalid variable name {name!r}")
    return name


def _type_rank(v) -> int:
    # bool before int: True == 1 in Python, so the type has to take part in
    # ordering and equality of states.
    if isinstance(v, bool):
        return 0
    if isinstance(v, int):
        return 1
    return 2


@dataclass(frozen=True)
class Domain:
    """A finite value set: ``bool``, ``int[lo..hi]`` or ``enum{labels}``.

    Equality is structural by kind and carrier, so ``bool`` and ``int[0..1]``
    are different domains.
    """

    kind: str
    lo: int = 0
    hi: int = 0
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == "bool":
            if self.lo or self.hi or self.labels:
                raise StateSpaceError("bool domain takes no parameters")
        elif self.kind == "int":
            if isinstance(self.lo, bool) or isinstance(self.hi, bool):
                raise StateSpaceError("integer bounds must be integers")
            if self.lo > self.hi:
                raise StateSpaceError(f"empty integer range [{self.lo}..{self.hi}]")
            if self.labels:
                raise StateSpaceError("int domain takes no labels")
        elif self.kind == "enum":
            if not self.labels:
                raise StateSpaceError("enumeration needs at least one label")
            if len(set(self.labels)) != len(self.labels):
                raise StateSpaceError(f"duplicate enumeration labels {self.labels}")
            for label in self.labels:
                check_name(label)
            object.__setattr__(self, "labels", tuple(self.labels))
        else:
            raise StateSpaceError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def boolean(cls) -> Domain:
        return cls("bool")

    @classmethod
    def integer(cls, lo: int, hi: int) -> Domain:
        return cls("int", lo, hi)

    @classmethod
    def enum(cls, labels: Iterable[str]) -> Domain:
        return cls("enum", labels=tuple(labels))

    @property
    def carrier(self) -> tuple[Value, ...]:
        if self.kind == "bool":
            return (False, True)
        if self.kind == "int":
            return tuple(range(self.lo, self.hi + 1))
        return self.labels

    @property
    def size(self) -> int:
        if self.kind == "bool":
            return 2
        if self.kind == "int":
            return self.hi - self.lo + 1
        return len(self.labels)

    def __contains__(self, v) -> bool:
        if self.kind == "bool":
            return isinstance(v, bool)
        if self.kind == "int":
            return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi
        return isinstance(v, str) and v in self.labels

    def __str__(self) -> str:
        if self.kind == "bool":
            return "bool"
        if self.kind == "int":
            return f"int[{self.lo}..{self.hi}]"
        return "enum{" + ",".join(self.labels) + "}"

    def to_json(self) -> dict:
        if self.kind == "bool":
            return {"type": "bool"}
        if self.kind == "int":
            return {"type": "int", "min": self.lo, "max": self.hi}
        return {"type": "enum", "labels": list(self.labels)}

    @classmethod
    def from_json(cls, obj: Mapping) -> Domain:
        kind = obj.get("type")
        if kind == "bool":
            return cls.boolean()
        if kind == "int":
            return cls.integer(int(obj["min"]), int(obj["max"]))
        if kind == "enum":
            return cls.enum(obj["labels"])
        raise StateSpaceError(f"unknown domain type {kind!r}")


class State(Mapping):
    """Immutable, hashable map from variable names to values.

    Items are kept sorted by name.  Equality and hashing take the value's
    type into account so that ``{b: True}`` and ``{b: 1}`` differ.
    """

    __slots__ = ("_map", "_key", "_hash")

    def __init__(self, bindings: Mapping[str, Value] | Iterable[tuple[str, Value]] = ()):
        items = sorted(dict(bindings).items())
        self._map = dict(items)
        self._key = tuple((n, _type_rank(v), v) for n, v in items)
        self._hash = hash(self._key)

    def __getitem__(self, name):
        return self._map[name]

    def __iter__(self):
        return iter(self._map)

    def __len__(self):
        return len(self._map)

    def __contains__(self, name):
        return name in self._map

    def __eq__(self, other):
        if isinstance(other, State):
            return self._hash == other._hash and self._key == other._key
        return NotImplemented

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        return self._hash

    def __lt__(self, other: State):
        return self._key < other._key

    def __reduce__(self):
        return (State, (tuple(self._map.items()),))

    @property
    def sort_key(self):
        return self._key

    @property
    def names(self) -> frozenset[str]:
        return frozenset(self._map)

    def set(self, name: str, value: Value) -> State:
        m = dict(self._map)
        m[name] = value
        return State(m)

    def update(self, bindings: Mapping[str, Value]) -> State:
        m = dict(self._map)
        m.update(bindings)
        return State(m)

    def remove(self, *names: str) -> State:
        return State({n: v for n, v in self._map.items() if n not in names})

    def restrict(self, names: Iterable[str]) -> State:
        keep = set(names)
        return State({n: v for n, v in self._map.items() if n in keep})

    def rename(self, mapping: Mapping[str, str]) -> State:
        return State({mapping.get(n, n): v for n, v in self._map.items()})

    def __repr__(self):
        return format_state(self)


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def format_state(s: Mapping[str, Value]) -> str:
    return "{" + ", ".join(f"{n}:{format_value(v)}" for n, v in sorted(s.items())) + "}"


class StateSpace(Mapping):
    """A direct product: variable name -> :class:`Domain`.

    The empty space is allowed and denotes the empty product, so it has no
    states at all.
    """

    __slots__ = ("_components", "_hash")

    def __init__(self, components: Mapping[str, Domain] | Iterable[tuple[str, Domain]] = ()):
        comps = dict(components)
        for name, dom in comps.items():
            check_name(name)
            if not isinstance(dom, Domain):
                raise StateSpaceError(f"component {name} is not a Domain")
        self._components = dict(sorted(comps.items()))
        self._hash = hash(tuple(self._components.items()))

    def __getitem__(self, name) -> Domain:
        return self._components[name]

    def __iter__(self):
        return iter(self._components)

    def __len__(self):
        return len(self._components)

    def __eq__(self, other):
        if isinstance(other, StateSpace):
            return self._components == other._components
        return NotImplemented

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return (StateSpace, (tuple(self._components.items()),))

    def __repr__(self):
        return "StateSpace(" + ", ".join(f"{n}: {d}" for n, d in self._components.items()) + ")"

    @property
    def names(self) -> frozenset[str]:
        return frozenset(self._components)

    @property
    def size(self) -> int:
        if not self._components:
            return 0
        n = 1
        for d in self._components.values():
            n *= d.size
        return n

    def contains_state(self, s: Mapping[str, Value]) -> bool:
        """True iff ``s`` is exactly a state of this space."""
        if len(s) != len(self._components):
            return False
        for name, dom in self._components.items():
            if name not in s or s[name] not in dom:
                return False
        return True

    def contains_superstate(self, s: Mapping[str, Value]) -> bool:
        """True iff ``s`` binds every component with an in-domain value."""
        return all(name in s and s[name] in dom for name, dom in self._components.items())

    def add(self, name: str, dom: Domain) -> StateSpace:
        comps = dict(self._components)
        comps[name] = dom
        return StateSpace(comps)

    def subspace(self, names: Iterable[str]) -> StateSpace:
        return StateSpace({n: self._components[n] for n in names})

    def rename(self, mapping: Mapping[str, str]) -> StateSpace:
        return StateSpace({mapping.get(n, n): d for n, d in self._components.items()})

    def to_json(self) -> dict:
        return {"vars": {n: d.to_json() for n, d in self._components.items()}}

    @classmethod
    def from_json(cls, obj: Mapping) -> StateSpace:
        return cls({n: Domain.from_json(d) for n, d in obj["vars"].items()})


def enumerate_states(space: StateSpace, budget: int = DEFAULT_ENUMERATION_BUDGET) -> Iterator[State]:
    """Yield every state of ``space`` once, variables sorted, values in domain order."""
    if not space:
        return iter(())
    if space.size > budget:
        raise BudgetExceeded(f"state space has {space.size} states, budget is {budget}")
    names = list(space)
    carriers = [space[n].carrier for n in names]
    return (State(zip(names, values)) for values in itertools.product(*carriers))


def is_subspace(sub: StateSpace, space: StateSpace) -> bool:
    return all(name in space and space[name] == dom for name, dom in sub.items())


def spaces_equivalent(a: StateSpace, b: StateSpace) -> dict[str, str] | None:
    """Return a bijection ``nu`` with ``a[i] == b[nu[i]]``, or None.

    Among all such bijections the lexicographically smallest one (by source
    names in sorted order) is returned: each source takes the smallest free
    target with an equal domain.  Greedy is enough because domain equality
    partitions the names into classes.
    """
    if len(a) != len(b):
        return None
    free = sorted(b)
    nu = {}
    for name in sorted(a):
        for target in free:
            if b[target] == a[name]:
                nu[name] = target
                free.remove(target)
                break
        else:
            return None
    return nu


def project(s: Mapping[str, Value], space: StateSpace) -> State:
    for name, dom in space.items():
        if name not in s:
            raise NotASuperstate(f"{name} is not bound in {format_state(s)}")
        if s[name] not in dom:
            raise NotASuperstate(f"value of {name} in {format_state(s)} is not in {dom}")
    return State({n: s[n] for n in space})


def project_sequence(seq, space: StateSpace):
    """Project a sequence of states pointwise.

    Executions (anything with a ``map_states`` method) keep their lasso shape.
    """
    if hasattr(seq, "map_states"):
        return seq.map_states(lambda s: project(s, space))
    return [project(s, space) for s in seq]


def check_renaming(mapping: Mapping[str, str]) -> dict[str, str]:
    """Validate that ``mapping`` is injective and return it as a dict."""
    mapping = dict(mapping)
    for src, dst in mapping.items():
        check_name(src)
        check_name(dst)
    if len(set(mapping.values())) != len(mapping):
        raise StateSpaceError(f"renaming {mapping} is not injective")
    return mapping


def invert_renaming(mapping: Mapping[str, str]) -> dict[str, str]:
    return {v: k for k, v in check_renaming(mapping).items()}


def fresh_name(base: str, taken) -> str:
    """``base`` itself if free, else ``base_n`` with the smallest free n."""
    if base not in taken:
        return base
    n = 1
    while f"{base}_{n}" in taken:
        n += 1
    return f"{base}_{n}"


def state_from_json(obj: Mapping) -> State:
    for name, v in obj.items():
        check_name(name)
        if not isinstance(v, (bool, int, str)):
            raise StateSpaceError(f"unsupported value {v!r} for {name}")
    return State(obj)


def state_to_json(s: State) -> dict:
    return dict(s.items())


def parse_state_in_space(obj: Mapping, space: StateSpace) -> State:
    s = state_from_json(obj)
    if not space.contains_state(s):
        raise StateSpaceError(f"{format_state(s)} is not a state of {space!r}")
    return s


def states_sorted(states: Iterable[State]) -> list[State]:
    return sorted(states, key=lambda s: s.sort_key)


def sequence_key(seq: Sequence[State]):
    return tuple(s.sort_key for s in seq)
