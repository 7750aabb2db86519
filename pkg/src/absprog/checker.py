"""Scope and type checking of parsed programs.

Checking also resolves bare identifiers that name enumeration labels into
:class:`EnumLit` nodes, so the checked AST is what the interpreter runs.
"""

from __future__ import annotations

from dataclasses import replace

from .parser import Diagnostic
from .state_space import Domain
from .syntax import (
    COMPARISONS,
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
    Subprogram,
    UnOp,
    Var,
    VarBlock,
    While,
)

ARITH = frozenset(["+", "-", "*", "div", "mod"])
ORDER = frozenset(["<", "<=", ">", ">="])


def type_of(d: Domain) -> str:
    return d.kind


def _at(node):
    pos = getattr(node, "pos", None)
    return pos if pos else (0, 0)


class Checker:
    def __init__(self, prog: Program, allow_globals: bool):
        self.prog = prog
        self.allow_globals = allow_globals
        self.diags: list[Diagnostic] = []
        self.subs: dict[str, Subprogram] = {}
        self.labels: set[str] = set()

    def err(self, node, msg):
        line, col = _at(node)
        self.diags.append(Diagnostic(line, col, msg))

    def warn(self, node, msg):
        line, col = _at(node)
        self.diags.append(Diagnostic(line, col, msg, "warning"))

    def collect_labels(self):
        doms = list(self.prog.space.values())
        var_names = set(self.prog.space)

        def walk(s):
            if isinstance(s, VarBlock):
                doms.append(s.domain)
                var_names.add(s.name)
                walk(s.body)
            elif isinstance(s, Seq):
                for x in s.stmts:
                    walk(x)
            elif isinstance(s, (If,)):
                for _, x in s.arms:
                    walk(x)
            elif isinstance(s, Choose):
                for x in s.arms:
                    walk(x)
            elif isinstance(s, While):
                walk(s.body)

        walk(self.prog.body)
        for sub in self.prog.subs:
            for n, d in sub.outs + sub.ins:
                doms.append(d)
                var_names.add(n)
            walk(sub.body)
        for d in doms:
            if d.kind == "enum":
                self.labels.update(d.labels)
        for label in sorted(self.labels & var_names):
            self.err(None, f"enumeration label {label} is also used as a variable name")

    # -- expressions: return (resolved expr, type or None)
    def expr(self, e, scope: dict[str, Domain]):
        if isinstance(e, IntLit):
            return e, "int"
        if isinstance(e, BoolLit):
            return e, "bool"
        if isinstance(e, EnumLit):
            return e, "enum"
        if isinstance(e, Var):
            if e.name in scope:
                return e, type_of(scope[e.name])
            if e.name in self.labels:
                return EnumLit(e.name, pos=e.pos), "enum"
            self.err(e, f"variable {e.name} is not in scope")
            return e, None
        if isinstance(e, UnOp):
            operand, t = self.expr(e.operand, scope)
            want = "bool" if e.op == "not" else "int"
            if t is not None and t != want:
                self.err(e, f"operand of {e.op} must be {want}, got {t}")
            return replace(e, operand=operand), want
        if isinstance(e, BinOp):
            left, lt = self.expr(e.left, scope)
            right, rt = self.expr(e.right, scope)
            out = replace(e, left=left, right=right)
            if e.op in ("and", "or"):
                for t in (lt, rt):
                    if t is not None and t != "bool":
                        self.err(e, f"operands of {e.op} must be bool, got {t}")
                return out, "bool"
            if e.op in ARITH:
                for t in (lt, rt):
                    if t is not None and t != "int":
                        self.err(e, f"operands of {e.op} must be int, got {t}")
                return out, "int"
            if e.op in COMPARISONS:
                if lt is not None and rt is not None and lt != rt:
                    self.err(e, f"cannot compare {lt} with {rt}")
                if e.op in ORDER:
                    for t in (lt, rt):
                        if t is not None and t != "int":
                            self.err(e, f"operands of {e.op} must be int, got {t}")
                return out, "bool"
            self.err(e, f"unknown operator {e.op}")
            return out, None
        if isinstance(e, CallExpr):
            typed = [self.expr(a, scope) for a in e.args]
            out = replace(e, args=tuple(a for a, _ in typed))
            sub = self.subs.get(e.name)
            if sub is None:
                self.err(e, f"unknown subprogram {e.name}")
                return out, None
            if len(sub.outs) != 1:
                self.err(e, f"call expression on {e.name}, which has {len(sub.outs)} outputs (needs exactly one)")
                return out, None
            self.check_args(e, sub, e.args, [t for _, t in typed])
            return out, type_of(sub.outs[0][1])
        raise TypeError(f"not an expression: {e!r}")

    def check_args(self, node, sub: Subprogram, args, types):
        if len(args) != len(sub.ins):
            self.err(node, f"{sub.name} takes {len(sub.ins)} input argument(s), {len(args)} given")
            return
        for (pname, pdom), a, t in zip(sub.ins, args, types):
            if t is not None and t != type_of(pdom):
                self.err(a, f"argument for {pname} of {sub.name} must be {type_of(pdom)}, got {t}")

    def guard(self, g, scope):
        g2, t = self.expr(g, scope)
        if t is not None and t != "bool":
            self.err(g, f"guard must be bool, got {t}")
        return g2

    # -- statements
    def stmt(self, s, scope: dict[str, Domain]):
        if isinstance(s, Skip):
            return s
        if isinstance(s, Assign):
            if len(set(s.targets)) != len(s.targets):
                self.err(s, "a variable is assigned more than once in one statement")
            if len(s.targets) != len(s.exprs):
                self.err(s, f"{len(s.targets)} target(s) but {len(s.exprs)} expression(s)")
            exprs = []
            for i, e in enumerate(s.exprs):
                e2, t = self.expr(e, scope)
                exprs.append(e2)
                if i < len(s.targets):
                    target = s.targets[i]
                    if target not in scope:
                        self.err(s, f"variable {target} is not in scope")
                    elif t is not None and t != type_of(scope[target]):
                        self.err(e, f"cannot assign {t} to {target} of type {type_of(scope[target])}")
            for target in s.targets[len(s.exprs):]:
                if target not in scope:
                    self.err(s, f"variable {target} is not in scope")
            return replace(s, exprs=tuple(exprs))
        if isinstance(s, Seq):
            return replace(s, stmts=tuple(self.stmt(x, scope) for x in s.stmts))
        if isinstance(s, If):
            return replace(s, arms=tuple((self.guard(g, scope), self.stmt(b, scope)) for g, b in s.arms))
        if isinstance(s, While):
            return replace(s, guard=self.guard(s.guard, scope), body=self.stmt(s.body, scope))
        if isinstance(s, Choose):
            return replace(s, arms=tuple(self.stmt(x, scope) for x in s.arms))
        if isinstance(s, VarBlock):
            if s.name in scope:
                self.err(s, f"local {s.name} would shadow a variable in scope")
            init, t = self.expr(s.init, scope)
            if t is not None and t != type_of(s.domain):
                self.err(s.init, f"initial value of {s.name} must be {type_of(s.domain)}, got {t}")
            inner = dict(scope)
            inner[s.name] = s.domain
            return replace(s, init=init, body=self.stmt(s.body, inner))
        if isinstance(s, CallStmt):
            typed = [self.expr(a, scope) for a in s.args]
            args = tuple(a for a, _ in typed)
            sub = self.subs.get(s.name)
            if len(set(s.outputs)) != len(s.outputs):
                self.err(s, "output arguments of a call must be distinct variables")
            for o in s.outputs:
                if o not in scope:
                    self.err(s, f"variable {o} is not in scope")
            if sub is None:
                self.err(s, f"unknown subprogram {s.name}")
            else:
                if len(s.outputs) != len(sub.outs):
                    self.err(s, f"{sub.name} has {len(sub.outs)} output parameter(s), {len(s.outputs)} given")
                else:
                    for (pname, pdom), o in zip(sub.outs, s.outputs):
                        if o in scope and type_of(scope[o]) != type_of(pdom):
                            self.err(s, f"output {o} has type {type_of(scope[o])}, {pname} of {sub.name} is {type_of(pdom)}")
                self.check_args(s, sub, s.args, [t for _, t in typed])
                used = set()
                for a in s.args:
                    used |= free_vars(a)
                for o in s.outputs:
                    if o in used:
                        self.warn(s, f"{o} is passed both as input and as output of {s.name}")
            return replace(s, args=args)
        raise TypeError(f"not a statement: {s!r}")

    def run(self) -> Program:
        prog = self.prog
        for sub in prog.subs:
            if sub.name in self.subs:
                self.err(sub, f"subprogram {sub.name} declared twice")
            self.subs[sub.name] = sub
        self.collect_labels()
        subs = []
        for sub in prog.subs:
            params = sub.outs + sub.ins
            names = [n for n, _ in params]
            if len(set(names)) != len(names):
                self.err(sub, f"formal parameters of {sub.name} must be pairwise distinct")
            scope = dict(prog.space) if self.allow_globals else {}
            for n, d in params:
                if n in scope and self.allow_globals and n in prog.space:
                    self.err(sub, f"formal {n} of {sub.name} would shadow a global variable")
                scope[n] = d
            subs.append(replace(sub, body=self.stmt(sub.body, scope)))
        body = self.stmt(prog.body, dict(prog.space))
        return Program(prog.space, tuple(subs), body)


def free_vars(e) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, UnOp):
        return free_vars(e.operand)
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, CallExpr):
        out = set()
        for a in e.args:
            out |= free_vars(a)
        return out
    return set()


def check(prog: Program, allow_globals: bool = False) -> tuple[Program, list[Diagnostic]]:
    c = Checker(prog, allow_globals)
    resolved = c.run()
    diags = sorted(c.diags, key=lambda d: (d.line, d.col, d.message))
    return resolved, diags
