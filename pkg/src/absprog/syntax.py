"""AST of the guarded command language and its pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .state_space import Domain, StateSpace

Pos = Union[tuple, None]


def _pos():
    return field(default=None, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class EnumLit:
    label: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class UnOp:
    op: str  # "not" | "-"
    operand: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class CallExpr:
    name: str
    args: tuple
    pos: Pos = _pos()


Expr = Union[IntLit, BoolLit, EnumLit, Var, UnOp, BinOp, CallExpr]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True, eq=True)
class Skip:
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign:
    targets: tuple[str, ...]
    exprs: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class Seq:
    stmts: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class If:
    arms: tuple  # of (guard, stmt)
    pos: Pos = _pos()


@dataclass(frozen=True)
class While:
    guard: Expr
    body: Stmt
    pos: Pos = _pos()


@dataclass(frozen=True)
class Choose:
    arms: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class VarBlock:
    name: str
    domain: Domain
    init: Expr
    body: Stmt
    pos: Pos = _pos()


@dataclass(frozen=True)
class CallStmt:
    outputs: tuple[str, ...]
    name: str
    args: tuple
    pos: Pos = _pos()


Stmt = Union[Skip, Assign, Seq, If, While, Choose, VarBlock, CallStmt]


@dataclass(frozen=True)
class Subprogram:
    name: str
    outs: tuple  # of (name, Domain)
    ins: tuple
    body: Stmt
    pos: Pos = _pos()

    @property
    def base(self) -> StateSpace:
        return StateSpace(list(self.outs) + list(self.ins))


@dataclass(frozen=True)
class Program:
    space: StateSpace
    subs: tuple
    body: Stmt

    def sub(self, name: str) -> Subprogram:
        for s in self.subs:
            if s.name == name:
                return s
        raise KeyError(name)


def seq(*stmts) -> Stmt:
    flat = []
    for s in stmts:
        if isinstance(s, Seq):
            flat.extend(s.stmts)
        else:
            flat.append(s)
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


# -- pretty-printing -----------------------------------------------------------

_PREC = {
    "or": 1,
    "and": 2,
    "=": 4, "/=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "div": 6, "mod": 6,
}
COMPARISONS = frozenset(["=", "/=", "<", "<=", ">", ">="])


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, UnOp):
        return 3 if e.op == "not" else 7
    return 9


def format_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, EnumLit):
        return e.label
    if isinstance(e, Var):
        return e.name
    if isinstance(e, CallExpr):
        return f"{e.name}(" + ", ".join(format_expr(a) for a in e.args) + ")"
    if isinstance(e, UnOp):
        inner = format_expr(e.operand)
        if _prec(e.operand) < _prec(e):
            inner = f"({inner})"
        return f"not {inner}" if e.op == "not" else f"-{inner}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left, right = format_expr(e.left), format_expr(e.right)
        lp, rp = _prec(e.left), _prec(e.right)
        # left-associative; comparisons do not associate at all
        if lp < p or (lp == p and e.op in COMPARISONS):
            left = f"({left})"
        if rp <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def format_decl(name: str, d: Domain) -> str:
    return f"{name}: {d}"


def _lines(s, ind: int) -> list[str]:
    pad = "  " * ind
    if isinstance(s, Skip):
        return [pad + "skip"]
    if isinstance(s, Assign):
        return [pad + ", ".join(s.targets) + " := " + ", ".join(format_expr(e) for e in s.exprs)]
    if isinstance(s, CallStmt):
        args = ", ".join(format_expr(e) for e in s.args)
        return [pad + "(" + ", ".join(s.outputs) + f") := {s.name}({args})"]
    if isinstance(s, Seq):
        out = []
        for i, sub in enumerate(s.stmts):
            lines = _lines(sub, ind)
            if i < len(s.stmts) - 1:
                lines[-1] += ";"
            out.extend(lines)
        return out
    if isinstance(s, If):
        out = []
        for i, (g, body) in enumerate(s.arms):
            head = "if " if i == 0 else "[] "
            out.append(pad + head + format_expr(g) + " ->")
            out.extend(_lines(body, ind + 1))
        out.append(pad + "fi")
        return out
    if isinstance(s, While):
        return [pad + f"while {format_expr(s.guard)} do", *_lines(s.body, ind + 1), pad + "od"]
    if isinstance(s, Choose):
        out = []
        for i, arm in enumerate(s.arms):
            out.append(pad + ("choose" if i == 0 else "[]"))
            out.extend(_lines(arm, ind + 1))
        out.append(pad + "endchoose")
        return out
    if isinstance(s, VarBlock):
        return [
            pad + f"var {format_decl(s.name, s.domain)} := {format_expr(s.init)} in",
            *_lines(s.body, ind + 1),
            pad + "end",
        ]
    raise TypeError(f"not a statement: {s!r}")


def format_stmt(s, indent: int = 0) -> str:
    return "\n".join(_lines(s, indent))


def format_program(p: Program) -> str:
    out = ["space " + ", ".join(format_decl(n, d) for n, d in p.space.items())]
    for sub in p.subs:
        outs = ", ".join(format_decl(n, d) for n, d in sub.outs)
        ins = ", ".join(format_decl(n, d) for n, d in sub.ins)
        out.append(f"sub ({outs}) := {sub.name}({ins})")
        out.extend(_lines(sub.body, 1))
        out.append("end")
    out.append("begin")
    out.extend(_lines(p.body, 1))
    out.append("end")
    return "\n".join(out) + "\n"
