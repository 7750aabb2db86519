"""Source-to-source rewrites: call-expression hoisting and call inlining."""

from __future__ import annotations

from dataclasses import replace

from .state_space import Domain, fresh_name
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
    Subprogram,
    UnOp,
    Var,
    VarBlock,
    While,
    seq,
)


class RewriteError(Exception):
    pass


class MultiOutputCallee(RewriteError):
    pass


class RecursiveCallGraph(RewriteError):
    pass


def literal(d: Domain, value=None):
    """Literal for ``value`` (default: the first value of ``d``)."""
    v = d.carrier[0] if value is None else value
    if d.kind == "bool":
        return BoolLit(v)
    if d.kind == "int":
        return IntLit(v)
    return EnumLit(v)


# -- name collection -----------------------------------------------------------


def expr_names(e, out: set):
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, UnOp):
        expr_names(e.operand, out)
    elif isinstance(e, BinOp):
        expr_names(e.left, out)
        expr_names(e.right, out)
    elif isinstance(e, CallExpr):
        for a in e.args:
            expr_names(a, out)
    return out


def stmt_names(s, out: set):
    """Every variable name mentioned or bound in ``s``."""
    if isinstance(s, Assign):
        out.update(s.targets)
        for e in s.exprs:
            expr_names(e, out)
    elif isinstance(s, Seq):
        for x in s.stmts:
            stmt_names(x, out)
    elif isinstance(s, If):
        for g, b in s.arms:
            expr_names(g, out)
            stmt_names(b, out)
    elif isinstance(s, While):
        expr_names(s.guard, out)
        stmt_names(s.body, out)
    elif isinstance(s, Choose):
        for x in s.arms:
            stmt_names(x, out)
    elif isinstance(s, VarBlock):
        out.add(s.name)
        expr_names(s.init, out)
        stmt_names(s.body, out)
    elif isinstance(s, CallStmt):
        out.update(s.outputs)
        for e in s.args:
            expr_names(e, out)
    return out


def program_names(p: Program) -> set[str]:
    names = set(p.space)
    stmt_names(p.body, names)
    for sub in p.subs:
        names.update(n for n, _ in sub.outs + sub.ins)
        stmt_names(sub.body, names)
    return names


# -- call expressions ---------------------------------------------------------


class _Hoister:
    def __init__(self, prog: Program):
        self.subs = {s.name: s for s in prog.subs}
        self.taken = program_names(prog)

    def temp(self) -> str:
        name = fresh_name("t", self.taken)
        self.taken.add(name)
        return name

    def extract(self, e, hoisted: list):
        """Replace call expressions in ``e`` by temporaries, innermost first."""
        if isinstance(e, UnOp):
            return replace(e, operand=self.extract(e.operand, hoisted))
        if isinstance(e, BinOp):
            left = self.extract(e.left, hoisted)
            right = self.extract(e.right, hoisted)
            return replace(e, left=left, right=right)
        if isinstance(e, CallExpr):
            args = tuple(self.extract(a, hoisted) for a in e.args)
            sub = self.subs.get(e.name)
            if sub is None:
                raise RewriteError(f"unknown subprogram {e.name}")
            if len(sub.outs) != 1:
                raise MultiOutputCallee(f"{e.name} has {len(sub.outs)} outputs; call expressions need exactly one")
            t = self.temp()
            hoisted.append((t, sub.outs[0][1], CallStmt((t,), e.name, args, pos=e.pos)))
            return Var(t, pos=e.pos)
        return e

    @staticmethod
    def wrap(hoisted, inner):
        for t, dom, call in reversed(hoisted):
            inner = VarBlock(t, dom, literal(dom), seq(call, inner))
        return inner

    def stmt(self, s):
        if isinstance(s, Skip):
            return s
        if isinstance(s, Assign):
            h = []
            exprs = tuple(self.extract(e, h) for e in s.exprs)
            return self.wrap(h, replace(s, exprs=exprs))
        if isinstance(s, Seq):
            return Seq(tuple(self.stmt(x) for x in s.stmts), pos=s.pos)
        if isinstance(s, If):
            h = []
            guards = [self.extract(g, h) for g, _ in s.arms]
            arms = tuple((g, self.stmt(b)) for g, (_, b) in zip(guards, s.arms))
            return self.wrap(h, replace(s, arms=arms))
        if isinstance(s, While):
            h = []
            guard = self.extract(s.guard, h)
            body = self.stmt(s.body)
            if h:
                # the guard is re-evaluated after every iteration
                body = seq(body, *[call for _, _, call in h])
            return self.wrap(h, replace(s, guard=guard, body=body))
        if isinstance(s, Choose):
            return replace(s, arms=tuple(self.stmt(x) for x in s.arms))
        if isinstance(s, VarBlock):
            h = []
            init = self.extract(s.init, h)
            return self.wrap(h, replace(s, init=init, body=self.stmt(s.body)))
        if isinstance(s, CallStmt):
            h = []
            args = tuple(self.extract(a, h) for a in s.args)
            return self.wrap(h, replace(s, args=args))
        raise TypeError(f"not a statement: {s!r}")


def desugar_call_expressions(prog: Program) -> Program:
    """Hoist every call expression into a temporary and a call statement."""
    h = _Hoister(prog)
    subs = tuple(replace(sub, body=h.stmt(sub.body)) for sub in prog.subs)
    return Program(prog.space, subs, h.stmt(prog.body))


def has_call_expressions(prog: Program) -> bool:
    found = []

    def ex(e):
        if isinstance(e, CallExpr):
            found.append(e)
        elif isinstance(e, UnOp):
            ex(e.operand)
        elif isinstance(e, BinOp):
            ex(e.left)
            ex(e.right)

    def st(s):
        if isinstance(s, Assign):
            for e in s.exprs:
                ex(e)
        elif isinstance(s, Seq):
            for x in s.stmts:
                st(x)
        elif isinstance(s, If):
            for g, b in s.arms:
                ex(g)
                st(b)
        elif isinstance(s, While):
            ex(s.guard)
            st(s.body)
        elif isinstance(s, Choose):
            for x in s.arms:
                st(x)
        elif isinstance(s, VarBlock):
            ex(s.init)
            st(s.body)
        elif isinstance(s, CallStmt):
            for e in s.args:
                ex(e)

    st(prog.body)
    for sub in prog.subs:
        st(sub.body)
    return bool(found)


# -- renaming and inlining ----------------------------------------------------


def rename_expr(e, m: dict):
    if isinstance(e, Var):
        return replace(e, name=m.get(e.name, e.name))
    if isinstance(e, UnOp):
        return replace(e, operand=rename_expr(e.operand, m))
    if isinstance(e, BinOp):
        return replace(e, left=rename_expr(e.left, m), right=rename_expr(e.right, m))
    if isinstance(e, CallExpr):
        return replace(e, args=tuple(rename_expr(a, m) for a in e.args))
    return e


def rename_stmt(s, m: dict):
    if isinstance(s, Skip):
        return s
    if isinstance(s, Assign):
        return replace(s, targets=tuple(m.get(t, t) for t in s.targets), exprs=tuple(rename_expr(e, m) for e in s.exprs))
    if isinstance(s, Seq):
        return replace(s, stmts=tuple(rename_stmt(x, m) for x in s.stmts))
    if isinstance(s, If):
        return replace(s, arms=tuple((rename_expr(g, m), rename_stmt(b, m)) for g, b in s.arms))
    if isinstance(s, While):
        return replace(s, guard=rename_expr(s.guard, m), body=rename_stmt(s.body, m))
    if isinstance(s, Choose):
        return replace(s, arms=tuple(rename_stmt(x, m) for x in s.arms))
    if isinstance(s, VarBlock):
        return replace(s, name=m.get(s.name, s.name), init=rename_expr(s.init, m), body=rename_stmt(s.body, m))
    if isinstance(s, CallStmt):
        return replace(
            s, outputs=tuple(m.get(o, o) for o in s.outputs), args=tuple(rename_expr(a, m) for a in s.args)
        )
    raise TypeError(f"not a statement: {s!r}")


def bound_names(s, out: list):
    """Names bound by VarBlocks inside ``s``, in textual order."""
    if isinstance(s, VarBlock):
        out.append(s.name)
        bound_names(s.body, out)
    elif isinstance(s, Seq):
        for x in s.stmts:
            bound_names(x, out)
    elif isinstance(s, If):
        for _, b in s.arms:
            bound_names(b, out)
    elif isinstance(s, While):
        bound_names(s.body, out)
    elif isinstance(s, Choose):
        for x in s.arms:
            bound_names(x, out)
    return out


def calls_in(s, out: set):
    if isinstance(s, CallStmt):
        out.add(s.name)
    elif isinstance(s, Seq):
        for x in s.stmts:
            calls_in(x, out)
    elif isinstance(s, If):
        for _, b in s.arms:
            calls_in(b, out)
    elif isinstance(s, While):
        calls_in(s.body, out)
    elif isinstance(s, Choose):
        for x in s.arms:
            calls_in(x, out)
    elif isinstance(s, VarBlock):
        calls_in(s.body, out)
    return out


def call_order(prog: Program) -> list[str]:
    """Subprogram names, callees before callers; raises on recursion."""
    graph = {sub.name: sorted(calls_in(sub.body, set())) for sub in prog.subs}
    order, state = [], {}

    def visit(n, path):
        if state.get(n) == "done":
            return
        if state.get(n) == "active":
            cyc = path[path.index(n):] + [n]
            raise RecursiveCallGraph("recursive calls: " + " -> ".join(cyc))
        state[n] = "active"
        for m in graph.get(n, []):
            visit(m, path + [n])
        state[n] = "done"
        order.append(n)

    for n in sorted(graph):
        visit(n, [])
    return order


class _Inliner:
    def __init__(self, prog: Program):
        self.taken = program_names(prog)
        self.bodies: dict[str, Subprogram] = {}

    def fresh(self, name: str) -> str:
        new = fresh_name(name, self.taken)
        self.taken.add(new)
        return new

    def expand(self, call: CallStmt):
        sub = self.bodies[call.name]
        formals = [n for n, _ in sub.outs + sub.ins]
        m = {n: self.fresh(n) for n in formals + bound_names(sub.body, [])}
        body = rename_stmt(sub.body, m)
        outs = [(m[n], d) for n, d in sub.outs]
        # output formals start with any value of their domain
        pick = [Choose(tuple(Assign((n,), (literal(d, v),)) for v in d.carrier)) for n, d in outs if d.size > 1]
        copy_out = Assign(call.outputs, tuple(Var(n) for n, _ in outs))
        inner = seq(*pick, body, copy_out)
        for n, d in reversed(outs):
            inner = VarBlock(n, d, literal(d), inner)
        for (n, d), arg in reversed(list(zip(sub.ins, call.args))):
            inner = VarBlock(m[n], d, arg, inner)
        return inner

    def stmt(self, s):
        if isinstance(s, CallStmt):
            return self.expand(s)
        if isinstance(s, (Skip, Assign)):
            return s
        if isinstance(s, Seq):
            return seq(*[self.stmt(x) for x in s.stmts])
        if isinstance(s, If):
            return replace(s, arms=tuple((g, self.stmt(b)) for g, b in s.arms))
        if isinstance(s, While):
            return replace(s, body=self.stmt(s.body))
        if isinstance(s, Choose):
            return replace(s, arms=tuple(self.stmt(x) for x in s.arms))
        if isinstance(s, VarBlock):
            return replace(s, body=self.stmt(s.body))
        raise TypeError(f"not a statement: {s!r}")


def inline_calls(prog: Program) -> Program:
    """Replace every call by a block nest over freshly named formals.

    Inputs are copied in by value, output formals start nondeterministically
    and are copied back on exit.  The call graph must be acyclic.
    """
    if has_call_expressions(prog):
        prog = desugar_call_expressions(prog)
    order = call_order(prog)
    inl = _Inliner(prog)
    subs = {s.name: s for s in prog.subs}
    for name in order:
        sub = subs[name]
        inl.bodies[name] = replace(sub, body=inl.stmt(sub.body))
    return Program(prog.space, (), inl.stmt(prog.body))
