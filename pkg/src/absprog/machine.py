"""Nondeterministic small-step interpreter for the command language.

A configuration is a control stack, a store, the output formals that have
not received a value yet, and a call stack.  Stores are ordinary states over
base variables plus whatever locals and formals are alive, so the traces
show auxiliary variables appearing and disappearing.

Every binding site (block entry, call entry) picks a fresh store name, so a
recursive activation never clobbers its caller's formals.  Output formals
are nondeterministic over their whole domain; the choice is made when the
value is first read or copied out rather than at call entry, which keeps
the branching from multiplying across nested activations.
"""

from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from .program import Execution, ExtensionalProgram, UnknownState, executions_sorted
from .rewrite import desugar_call_expressions, has_call_expressions
from .state_space import (
    DEFAULT_ENUMERATION_BUDGET,
    Domain,
    State,
    enumerate_states,
    format_state,
    fresh_name,
    sequence_key,
)
from .syntax import (
    Assign,
    BinOp,
    BoolLit,
    CallExpr,
    CallStmt,
    Choose,
    EnumLit,
    If,
    IntLit,
    Program,
    Seq,
    Skip,
    UnOp,
    Var,
    VarBlock,
    While,
)


@dataclass(frozen=True)
class Budget:
    max_steps: int = 100_000
    max_depth: int = 64
    max_states: int = DEFAULT_ENUMERATION_BUDGET

    def __post_init__(self):
        if self.max_steps < 1 or self.max_depth < 1 or self.max_states < 1:
            raise ValueError("budgets must be positive")


class EvalError(Exception):
    """Partial operation (division by zero); the step diverges."""


class Unassigned(Exception):
    def __init__(self, store_name: str):
        self.store_name = store_name


# -- expression compilation ------------------------------------------------------

def _div(a, b):
    if b == 0:
        raise EvalError("division by zero")
    return a // b


def _mod(a, b):
    if b == 0:
        raise EvalError("modulo by zero")
    return a % b


_BINOPS: dict[str, Callable] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "div": _div,
    "mod": _mod,
    "=": lambda a, b: a == b,
    "/=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    # strict: both operands are always evaluated
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
}


def compile_expr(e) -> Callable:
    """Compile an expression into ``f(lookup) -> value``."""
    if isinstance(e, (IntLit, BoolLit)):
        v = e.value
        return lambda look: v
    if isinstance(e, EnumLit):
        v = e.label
        return lambda look: v
    if isinstance(e, Var):
        n = e.name
        return lambda look: look(n)
    if isinstance(e, UnOp):
        f = compile_expr(e.operand)
        if e.op == "not":
            return lambda look: not f(look)
        return lambda look: -f(look)
    if isinstance(e, BinOp):
        fl, fr, op = compile_expr(e.left), compile_expr(e.right), _BINOPS[e.op]

        def binop(look):
            a = fl(look)
            b = fr(look)
            return op(a, b)

        return binop
    if isinstance(e, CallExpr):
        raise TypeError("call expressions must be desugared before evaluation")
    raise TypeError(f"not an expression: {e!r}")


def eval_expr(e, bindings) -> object:
    return compile_expr(e)(bindings.__getitem__)


# -- configurations ------------------------------------------------------------

# control items
#   ("S", label, env_id)   execute statement `label` in environment `env_id`
#   ("POP", store_name)    leave a block: destroy the local
#   ("RET",)               subprogram body finished
#   ("DIV",)               diverge: the configuration loops on itself
#   ("OUT",)               call depth budget exhausted


@dataclass(frozen=True)
class Frame:
    sub: str
    saved: tuple
    outbind: tuple  # (formal store name, host store name, host domain)
    formals: tuple


@dataclass(frozen=True)
class Configuration:
    control: tuple
    store: State
    pending: tuple = ()  # (store name, Domain) of output formals without a value
    frames: tuple = ()
    emitted: bool = field(default=False, compare=False)

    @property
    def terminal(self) -> bool:
        return not self.control and not self.frames

    @property
    def exhausted(self) -> bool:
        return bool(self.control) and self.control[0][0] == "OUT"


DIVERGE = (("DIV",),)


@dataclass(frozen=True)
class Terminated:
    execution: Execution

    @property
    def final(self) -> State:
        return self.execution.last


@dataclass(frozen=True)
class ProvenDivergent:
    execution: Execution


@dataclass(frozen=True)
class BudgetExhausted:
    prefix: tuple
    reason: str  # "steps" | "depth"


RunOutcome = Terminated | ProvenDivergent | BudgetExhausted


def _outcome_key(o):
    if isinstance(o, BudgetExhausted):
        return (1, o.reason, sequence_key(o.prefix), ())
    return (0,) + o.execution.sort_key


@dataclass(frozen=True)
class Summary:
    """What a start state can lead to: final states, divergence, exhaustion."""

    finals: frozenset
    diverges: bool
    exhausted: bool


class Machine:
    def __init__(self, prog: Program, allow_globals: bool = False, budget: Budget | None = None):
        if has_call_expressions(prog):
            prog = desugar_call_expressions(prog)
        self.prog = prog
        self.allow_globals = allow_globals
        self.budget = budget or Budget()
        self.subs = {s.name: s for s in prog.subs}
        self.nodes: list = []
        self._labels: dict[int, int] = {}
        self._compiled: dict[int, object] = {}
        self._envs: dict[tuple, int] = {}
        self._env_maps: list[dict] = []
        self.body_label = self._index(prog.body)
        self.sub_labels = {s.name: self._index(s.body) for s in prog.subs}
        self.base_env = self._env(tuple((n, n, d) for n, d in prog.space.items()))
        self._globals = tuple((n, n, d) for n, d in prog.space.items()) if allow_globals else ()

    @property
    def space(self):
        return self.prog.space

    def _index(self, s) -> int:
        key = id(s)
        if key in self._labels:
            return self._labels[key]
        label = len(self.nodes)
        self._labels[key] = label
        self.nodes.append(s)
        if isinstance(s, Assign):
            self._compiled[label] = [compile_expr(e) for e in s.exprs]
        elif isinstance(s, CallStmt):
            self._compiled[label] = [compile_expr(e) for e in s.args]
        elif isinstance(s, VarBlock):
            self._compiled[label] = compile_expr(s.init)
            self._index(s.body)
        elif isinstance(s, While):
            self._compiled[label] = compile_expr(s.guard)
            self._index(s.body)
        elif isinstance(s, If):
            self._compiled[label] = [compile_expr(g) for g, _ in s.arms]
            for _, b in s.arms:
                self._index(b)
        elif isinstance(s, Seq):
            for x in s.stmts:
                self._index(x)
        elif isinstance(s, Choose):
            for x in s.arms:
                self._index(x)
        return label

    def _env(self, entries: tuple) -> int:
        entries = tuple(sorted(entries, key=lambda t: t[0]))
        env_id = self._envs.get(entries)
        if env_id is None:
            env_id = len(self._env_maps)
            self._envs[entries] = env_id
            self._env_maps.append({src: (name, dom) for src, name, dom in entries})
        return env_id

    def initial(self, a: State) -> Configuration:
        if not self.space.contains_state(a):
            raise UnknownState(f"{format_state(a)} is not a state of the declared space")
        return Configuration((("S", self.body_label, self.base_env),), a)

    # -- stepping
    def step(self, c: Configuration) -> list[Configuration]:
        """All immediate successors of a non-terminal configuration."""
        if not c.control:
            return []
        item, rest = c.control[0], c.control[1:]
        kind = item[0]
        if kind == "DIV":
            return [Configuration(c.control, c.store, c.pending, c.frames)]
        if kind == "OUT":
            return []
        if kind == "POP":
            return [Configuration(rest, c.store.remove(item[1]), c.pending, c.frames, True)]
        if kind == "RET":
            return self._return(c, rest)
        node = self.nodes[item[1]]
        env = self._env_maps[item[2]]
        try:
            return self._exec(c, node, item, env, rest)
        except Unassigned as u:
            return self._materialize(c, u.store_name)
        except EvalError:
            return [self._diverge(c)]

    def _diverge(self, c):
        return Configuration(DIVERGE, c.store, c.pending, c.frames)

    def _materialize(self, c, store_name):
        dom = dict(c.pending)[store_name]
        pending = tuple(p for p in c.pending if p[0] != store_name)
        return [Configuration(c.control, c.store.set(store_name, v), pending, c.frames, True) for v in dom.carrier]

    def _lookup(self, c, env):
        store = c.store

        def look(src):
            name = env[src][0]
            try:
                return store[name]
            except KeyError:
                raise Unassigned(name) from None

        return look

    @staticmethod
    def _assigned(pending, names):
        return tuple(p for p in pending if p[0] not in names)

    def _exec(self, c, node, item, env, rest):
        label, env_id = item[1], item[2]
        if isinstance(node, Skip):
            return [Configuration(rest, c.store, c.pending, c.frames)]
        if isinstance(node, Seq):
            head = tuple(("S", self._labels[id(s)], env_id) for s in node.stmts)
            return [Configuration(head + rest, c.store, c.pending, c.frames)]
        if isinstance(node, Assign):
            look = self._lookup(c, env)
            values = [f(look) for f in self._compiled[label]]
            updates = {}
            for target, v in zip(node.targets, values):
                name, dom = env[target]
                if v not in dom:
                    return [self._diverge(c)]
                updates[name] = v
            return [Configuration(rest, c.store.update(updates), self._assigned(c.pending, updates), c.frames, True)]
        if isinstance(node, If):
            look = self._lookup(c, env)
            guards = [f(look) for f in self._compiled[label]]
            out = [
                Configuration((("S", self._labels[id(b)], env_id),) + rest, c.store, c.pending, c.frames)
                for g, (_, b) in zip(guards, node.arms)
                if g
            ]
            return out or [self._diverge(c)]
        if isinstance(node, While):
            if self._compiled[label](self._lookup(c, env)):
                body = ("S", self._labels[id(node.body)], env_id)
                return [Configuration((body, item) + rest, c.store, c.pending, c.frames)]
            return [Configuration(rest, c.store, c.pending, c.frames)]
        if isinstance(node, Choose):
            return [
                Configuration((("S", self._labels[id(a)], env_id),) + rest, c.store, c.pending, c.frames)
                for a in node.arms
            ]
        if isinstance(node, VarBlock):
            v = self._compiled[label](self._lookup(c, env))
            if v not in node.domain:
                return [self._diverge(c)]
            taken = set(c.store) | {p[0] for p in c.pending}
            name = fresh_name(node.name, taken)
            entries = tuple((src, n, d) for src, (n, d) in env.items()) + ((node.name, name, node.domain),)
            inner = ("S", self._labels[id(node.body)], self._env(entries))
            return [Configuration((inner, ("POP", name)) + rest, c.store.set(name, v), c.pending, c.frames, True)]
        if isinstance(node, CallStmt):
            return self._call(c, node, label, env, rest)
        raise TypeError(f"cannot execute {node!r}")

    def _call(self, c, node, label, env, rest):
        sub = self.subs[node.name]
        look = self._lookup(c, env)
        values = [f(look) for f in self._compiled[label]]
        if len(c.frames) >= self.budget.max_depth:
            return [Configuration((("OUT",),), c.store, c.pending, c.frames)]
        for (_, dom), v in zip(sub.ins, values):
            if v not in dom:
                return [self._diverge(c)]
        taken = set(c.store) | {p[0] for p in c.pending}
        names = {}
        for pname, _ in sub.outs + sub.ins:
            names[pname] = fresh_name(pname, taken)
            taken.add(names[pname])
        entries = tuple((p, names[p], d) for p, d in sub.outs + sub.ins) + self._globals
        store = c.store.update({names[p]: v for (p, _), v in zip(sub.ins, values)})
        pending = c.pending + tuple((names[p], d) for p, d in sub.outs)
        outbind = tuple((names[p], env[o][0], env[o][1]) for (p, _), o in zip(sub.outs, node.outputs))
        frame = Frame(sub.name, rest, outbind, tuple(names[p] for p, _ in sub.outs + sub.ins))
        control = (("S", self.sub_labels[sub.name], self._env(entries)), ("RET",))
        return [Configuration(control, store, pending, c.frames + (frame,), True)]

    def _return(self, c, rest):
        frame = c.frames[-1]
        pending_names = {p[0] for p in c.pending}
        for formal, _, _ in frame.outbind:
            if formal in pending_names:
                return self._materialize(c, formal)
        updates = {}
        for formal, host, dom in frame.outbind:
            v = c.store[formal]
            if v not in dom:
                return [self._diverge(c)]
            updates[host] = v
        store = c.store.remove(*frame.formals).update(updates)
        gone = set(frame.formals) | set(updates)
        pending = tuple(p for p in c.pending if p[0] not in gone)
        return [Configuration(frame.saved, store, pending, c.frames[:-1], True)]

    # -- exploration
    def run_all(self, a: State) -> tuple:
        """Every execution from ``a``, cut at the first repeated configuration.

        Returns outcomes in canonical order.  Paths longer than
        ``max_steps`` configurations, or calls deeper than ``max_depth``,
        give :class:`BudgetExhausted` entries.
        """
        start = self.initial(a)
        max_steps = self.budget.max_steps
        results = set()
        path = [start]
        on_path = {start: 0}
        rec = [a]
        rec_len = [1]
        stack = [iter(self.step(start))]
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                del on_path[path.pop()]
                rec_len.pop()
                if rec_len:
                    del rec[rec_len[-1]:]
                continue
            n = len(rec)
            if nxt.emitted:
                rec.append(nxt.store)
            if nxt.terminal:
                results.add(Terminated(Execution(rec)))
            elif nxt.exhausted:
                results.add(BudgetExhausted(tuple(rec), "depth"))
            elif nxt in on_path:
                i = on_path[nxt]
                cycle = rec[rec_len[i]:] or [rec[-1]]
                results.add(ProvenDivergent(Execution(rec[: rec_len[i]], cycle)))
            elif len(path) >= max_steps:
                results.add(BudgetExhausted(tuple(rec), "steps"))
            else:
                on_path[nxt] = len(path)
                path.append(nxt)
                rec_len.append(len(rec))
                stack.append(iter(self.step(nxt)))
                continue
            del rec[n:]
        return tuple(sorted(results, key=_outcome_key))

    def summarize(self, a: State) -> Summary:
        """Final states, divergence and exhaustion from ``a``.

        Explores the configuration graph once (no path enumeration), so it
        stays polynomial where ``run_all`` would list exponentially many
        executions.
        """
        start = self.initial(a)
        max_steps = self.budget.max_steps
        finals = set()
        diverges = exhausted = False
        on_stack = {start}
        done = set()
        stack = [(start, iter(self.step(start)))]
        while stack:
            cfg, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                on_stack.discard(cfg)
                done.add(cfg)
                continue
            if nxt in on_stack:
                diverges = True
            elif nxt in done:
                continue
            elif nxt.terminal:
                finals.add(nxt.store)
                done.add(nxt)
            elif nxt.exhausted:
                exhausted = True
                done.add(nxt)
            elif len(stack) >= max_steps:
                exhausted = True
            else:
                on_stack.add(nxt)
                stack.append((nxt, iter(self.step(nxt))))
        return Summary(frozenset(finals), diverges, exhausted)


# -- whole-program views ----------------------------------------------------------

def run_all(prog: Program, a: State, budget: Budget | None = None, allow_globals: bool = False) -> tuple:
    return Machine(prog, allow_globals, budget).run_all(a)


def executions_of(outcomes) -> frozenset[Execution]:
    return frozenset(o.execution for o in outcomes if not isinstance(o, BudgetExhausted))


_FORKED: Machine | None = None


def _run_chunk(states):
    m = _FORKED
    return [(a, m.run_all(a)) for a in states]


def _summarize_chunk(states):
    m = _FORKED
    return [(a, m.summarize(a)) for a in states]


def _map_states(machine: Machine, states: list, worker, jobs: int):
    global _FORKED
    if jobs <= 1 or len(states) < 2 or "fork" not in multiprocessing.get_all_start_methods():
        _FORKED = machine
        try:
            return worker(states)
        finally:
            _FORKED = None
    chunks = [states[i::jobs] for i in range(jobs)]
    _FORKED = machine
    try:
        with ProcessPoolExecutor(max_workers=jobs, mp_context=multiprocessing.get_context("fork")) as ex:
            parts = list(ex.map(worker, chunks))
    finally:
        _FORKED = None
    merged = dict(pair for part in parts for pair in part)
    return [(a, merged[a]) for a in states]


def default_jobs() -> int:
    return max(1, min(4, os.cpu_count() or 1))


def to_extensional(
    prog: Program, budget: Budget | None = None, allow_globals: bool = False, jobs: int = 1
) -> ExtensionalProgram:
    """Tabulate every execution from every base state.

    Start states where some path ran out of budget are listed in
    ``unknown``; their rows keep whatever executions were completed.
    """
    m = Machine(prog, allow_globals, budget)
    states = list(enumerate_states(prog.space, m.budget.max_states))
    table, unknown = {}, set()
    for a, outcomes in _map_states(m, states, _run_chunk, jobs):
        table[a] = executions_of(outcomes)
        if any(isinstance(o, BudgetExhausted) for o in outcomes):
            unknown.add(a)
    return ExtensionalProgram(prog.space, table, frozenset(unknown))


def summarize_program(
    prog: Program, budget: Budget | None = None, allow_globals: bool = False, jobs: int = 1
) -> dict[State, Summary]:
    m = Machine(prog, allow_globals, budget)
    states = list(enumerate_states(prog.space, m.budget.max_states))
    return dict(_map_states(m, states, _summarize_chunk, jobs))


def format_outcome(o) -> str:
    from .program import format_execution

    if isinstance(o, BudgetExhausted):
        return format_execution(Execution(o.prefix)) + f" (budget exceeded: {o.reason})"
    return format_execution(o.execution)


__all__ = [
    "Budget",
    "BudgetExhausted",
    "Configuration",
    "Domain",
    "Frame",
    "Machine",
    "ProvenDivergent",
    "Summary",
    "Terminated",
    "executions_of",
    "executions_sorted",
    "run_all",
    "summarize_program",
    "to_extensional",
]
