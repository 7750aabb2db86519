"""Tokenizer and recursive-descent parser for the command language.

Grammar (newline-insensitive, ``#`` starts a line comment)::

    program   ::= "space" vardecl ("," vardecl)* subdecl* "begin" stmt "end"
    vardecl   ::= IDENT ":" type
    type      ::= "bool" | "int[" INT ".." INT "]" | "enum{" IDENT ("," IDENT)* "}"
    subdecl   ::= "sub" "(" vardecl ("," vardecl)* ")" ":=" IDENT "(" [vardecls] ")" stmt "end"
    stmt      ::= "skip" | idlist ":=" exprlist | stmt ";" stmt
                | "if" expr "->" stmt ("[]" expr "->" stmt)* "fi"
                | "while" expr "do" stmt "od"
                | "choose" stmt ("[]" stmt)* "endchoose"
                | "var" vardecl ":=" expr "in" stmt "end"
                | "(" idlist ")" ":=" IDENT "(" [exprlist] ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .state_space import Domain, StateSpace, StateSpaceError
from .syntax import (
    Assign,
    BinOp,
    BoolLit,
    CallExpr,
    CallStmt,
    Choose,
    If,
    IntLit,
    Program,
    Skip,
    Subprogram,
    UnOp,
    Var,
    VarBlock,
    While,
    seq,
)

KEYWORDS = frozenset(
    "space sub begin end skip if fi while do od choose endchoose var in "
    "true false and or not div mod bool int enum".split()
)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "kw", "sym", "eof"
    text: str
    line: int
    col: int

    @property
    def pos(self):
        return (self.line, self.col)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*'?)
  | (?P<sym>:=|->|\[\]|\.\.|/=|<=|>=|[-+*=<>(),:;\[\]{}])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError([Diagnostic(line, i - line_start + 1, f"unexpected character {text[i]!r}")])
        kind = m.lastgroup
        chunk = m.group()
        col = i - line_start + 1
        if kind == "ident" and chunk in KEYWORDS:
            kind = "kw"
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = i + chunk.rindex("\n") + 1
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


class Parser:
    def __init__(self, text: str, allow_primes: bool = False):
        self.toks = tokenize(text)
        self.i = 0
        self.allow_primes = allow_primes

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "sym") and t.text == text

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError([Diagnostic(tok.line, tok.col, f"{msg} (found {found})")])

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "ident":
            self.error("expected identifier")
        if t.text.endswith("'") and not self.allow_primes:
            self.error("primed names are only allowed in postconditions")
        self.i += 1
        return t

    def integer(self) -> int:
        neg = self.accept("-")
        t = self.tok
        if t.kind != "int":
            self.error("expected integer")
        self.i += 1
        return -int(t.text) if neg else int(t.text)

    # -- declarations
    def domain(self) -> Domain:
        t = self.tok
        try:
            if self.accept("bool"):
                return Domain.boolean()
            if self.accept("int"):
                self.expect("[")
                lo = self.integer()
                self.expect("..")
                hi = self.integer()
                self.expect("]")
                return Domain.integer(lo, hi)
            if self.accept("enum"):
                self.expect("{")
                labels = [self.ident().text]
                while self.accept(","):
                    labels.append(self.ident().text)
                self.expect("}")
                return Domain.enum(labels)
        except StateSpaceError as exc:
            raise ParseError([Diagnostic(t.line, t.col, str(exc))]) from None
        self.error("expected a type (bool, int[..], enum{..})")

    def vardecl(self) -> tuple[str, Domain, Token]:
        name = self.ident()
        self.expect(":")
        return name.text, self.domain(), name

    def decl_list(self) -> list[tuple[str, Domain, Token]]:
        decls = [self.vardecl()]
        while self.accept(","):
            decls.append(self.vardecl())
        return decls

    def program(self) -> Program:
        self.expect("space")
        decls = self.decl_list()
        seen = {}
        for name, dom, tok in decls:
            if name in seen:
                raise ParseError([Diagnostic(tok.line, tok.col, f"variable {name} declared twice in space")])
            seen[name] = dom
        subs = []
        while self.at("sub"):
            subs.append(self.subdecl())
        self.expect("begin")
        body = self.stmt()
        self.expect("end")
        if self.tok.kind != "eof":
            self.error("expected end of input")
        return Program(StateSpace(seen), tuple(subs), body)

    def subdecl(self) -> Subprogram:
        start = self.expect("sub")
        self.expect("(")
        outs = self.decl_list()
        self.expect(")")
        self.expect(":=")
        name = self.ident()
        self.expect("(")
        ins = [] if self.at(")") else self.decl_list()
        self.expect(")")
        body = self.stmt()
        self.expect("end")
        return Subprogram(
            name.text,
            tuple((n, d) for n, d, _ in outs),
            tuple((n, d) for n, d, _ in ins),
            body,
            pos=start.pos,
        )

    # -- statements
    def stmt(self):
        stmts = [self.simple_stmt()]
        while self.accept(";"):
            stmts.append(self.simple_stmt())
        return seq(*stmts)

    def simple_stmt(self):
        t = self.tok
        if self.accept("skip"):
            return Skip(pos=t.pos)
        if self.accept("if"):
            arms = [self.guarded()]
            while self.accept("[]"):
                arms.append(self.guarded())
            self.expect("fi")
            return If(tuple(arms), pos=t.pos)
        if self.accept("while"):
            g = self.expr()
            self.expect("do")
            body = self.stmt()
            self.expect("od")
            return While(g, body, pos=t.pos)
        if self.accept("choose"):
            arms = [self.stmt()]
            while self.accept("[]"):
                arms.append(self.stmt())
            self.expect("endchoose")
            return Choose(tuple(arms), pos=t.pos)
        if self.accept("var"):
            name, dom, _ = self.vardecl()
            self.expect(":=")
            init = self.expr()
            self.expect("in")
            body = self.stmt()
            self.expect("end")
            return VarBlock(name, dom, init, body, pos=t.pos)
        if self.accept("("):
            outs = [self.ident().text]
            while self.accept(","):
                outs.append(self.ident().text)
            self.expect(")")
            self.expect(":=")
            name = self.ident()
            self.expect("(")
            args = [] if self.at(")") else self.expr_list()
            self.expect(")")
            return CallStmt(tuple(outs), name.text, tuple(args), pos=t.pos)
        if t.kind == "ident":
            targets = [self.ident().text]
            while self.accept(","):
                targets.append(self.ident().text)
            self.expect(":=")
            exprs = self.expr_list()
            return Assign(tuple(targets), tuple(exprs), pos=t.pos)
        self.error("expected a statement")

    def guarded(self):
        g = self.expr()
        self.expect("->")
        return (g, self.stmt())

    # -- expressions, lowest precedence first
    def expr_list(self):
        es = [self.expr()]
        while self.accept(","):
            es.append(self.expr())
        return es

    def expr(self):
        return self.disj()

    def disj(self):
        e = self.conj()
        while self.at("or"):
            t = self.tok
            self.i += 1
            e = BinOp("or", e, self.conj(), pos=t.pos)
        return e

    def conj(self):
        e = self.neg()
        while self.at("and"):
            t = self.tok
            self.i += 1
            e = BinOp("and", e, self.neg(), pos=t.pos)
        return e

    def neg(self):
        t = self.tok
        if self.accept("not"):
            return UnOp("not", self.neg(), pos=t.pos)
        return self.comparison()

    def comparison(self):
        e = self.additive()
        if self.tok.kind == "sym" and self.tok.text in ("=", "/=", "<", "<=", ">", ">="):
            t = self.tok
            self.i += 1
            e = BinOp(t.text, e, self.additive(), pos=t.pos)
            if self.tok.kind == "sym" and self.tok.text in ("=", "/=", "<", "<=", ">", ">="):
                self.error("comparisons do not associate; add parentheses")
        return e

    def additive(self):
        e = self.multiplicative()
        while self.tok.kind == "sym" and self.tok.text in ("+", "-"):
            t = self.tok
            self.i += 1
            e = BinOp(t.text, e, self.multiplicative(), pos=t.pos)
        return e

    def multiplicative(self):
        e = self.unary()
        while (self.tok.kind == "sym" and self.tok.text == "*") or self.at("div") or self.at("mod"):
            t = self.tok
            self.i += 1
            e = BinOp(t.text, e, self.unary(), pos=t.pos)
        return e

    def unary(self):
        t = self.tok
        if self.accept("-"):
            if self.tok.kind == "int":
                n = self.tok
                self.i += 1
                return IntLit(-int(n.text), pos=t.pos)
            return UnOp("-", self.unary(), pos=t.pos)
        return self.atom()

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return IntLit(int(t.text), pos=t.pos)
        if self.accept("true"):
            return BoolLit(True, pos=t.pos)
        if self.accept("false"):
            return BoolLit(False, pos=t.pos)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            name = self.ident()
            if self.accept("("):
                args = [] if self.at(")") else self.expr_list()
                self.expect(")")
                return CallExpr(name.text, tuple(args), pos=t.pos)
            return Var(name.text, pos=t.pos)
        self.error("expected an expression")


def parse_raw(text: str) -> Program:
    """Parse without scope or type checking."""
    return Parser(text).program()


def parse_expr(text: str, allow_primes: bool = False):
    p = Parser(text, allow_primes=allow_primes)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error("expected end of expression")
    return e


def parse(text: str, allow_globals: bool = False) -> Program:
    """Parse and check a program; raises :class:`ParseError` with diagnostics."""
    from .checker import check

    prog = parse_raw(text)
    resolved, diags = check(prog, allow_globals=allow_globals)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ParseError(errors)
    return resolved
