import pytest

from absprog.analysis import effect
from absprog.machine import to_extensional
from absprog.parser import parse, parse_raw
from absprog.rewrite import (
    MultiOutputCallee,
    RecursiveCallGraph,
    call_order,
    desugar_call_expressions,
    has_call_expressions,
    inline_calls,
)
from absprog.syntax import Assign, BinOp, CallStmt, Choose, IntLit, Seq, Var, VarBlock, While

from generators import random_ast

HEAD = "space x: int[0..3], y: int[0..3]\nsub (r: int[0..3]) := f(p: int[0..3]) r := p end\n"


def test_single_hoist_shape():
    p = desugar_call_expressions(parse(HEAD + "begin x := f(1) end"))
    block = p.body
    assert isinstance(block, VarBlock) and block.name == "t" and block.init == IntLit(0)
    assert block.body == Seq((CallStmt(("t",), "f", (IntLit(1),)), Assign(("x",), (Var("t"),))))


def test_two_hoists_left_to_right():
    p = desugar_call_expressions(parse(HEAD + "begin x := f(1) + f(2) end"))
    outer = p.body
    inner = outer.body.stmts[1]
    assert outer.body.stmts[0] == CallStmt(("t",), "f", (IntLit(1),))
    assert inner.body.stmts[0] == CallStmt(("t_1",), "f", (IntLit(2),))
    assert inner.body.stmts[1] == Assign(("x",), (BinOp("+", Var("t"), Var("t_1")),))
    assert not has_call_expressions(p)


def test_nested_call_innermost_first():
    p = desugar_call_expressions(parse(HEAD + "begin x := f(f(y)) end"))
    assert p.body.body.stmts[0] == CallStmt(("t",), "f", (Var("y"),))
    assert p.body.body.stmts[1].body.stmts[0] == CallStmt(("t_1",), "f", (Var("t"),))


def test_temporaries_avoid_program_names():
    p = desugar_call_expressions(parse("space t: int[0..3]\nsub (r: int[0..3]) := f() r := 1 end\nbegin t := f() end"))
    assert p.body.name == "t_1"


def test_while_guard_call_reevaluated():
    p = desugar_call_expressions(parse(HEAD + "begin while f(x) < 2 do x := x + 1 od end"))
    loop = p.body.body.stmts[1]
    assert isinstance(loop, While)
    assert loop.body.stmts[-1] == CallStmt(("t",), "f", (Var("x"),))


def test_multi_output_callee_rejected():
    prog = parse_raw("space x: int[0..3]\nsub (a: int[0..3], b: int[0..3]) := g() a, b := 0, 0 end\nbegin x := g() end")
    with pytest.raises(MultiOutputCallee):
        desugar_call_expressions(prog)


def test_no_calls_unchanged():
    p = parse("space x: int[0..3] begin x := x + 1; skip end")
    assert inline_calls(p).body == p.body


def test_inline_single_call_shape():
    p = parse("space x: int[0..3], y: int[0..3]\nsub (r: int[0..3]) := inc(p: int[0..3]) r := p + 1 end\nbegin (y) := inc(x) end")
    q = inline_calls(p)
    assert q.subs == ()
    outer = q.body
    assert (outer.name, outer.init) == ("p_1", Var("x"))
    inner = outer.body
    assert inner.name == "r_1"
    choose, body, copy = inner.body.stmts
    assert isinstance(choose, Choose) and len(choose.arms) == 4
    assert body == Assign(("r_1",), (BinOp("+", Var("p_1"), IntLit(1)),))
    assert copy == Assign(("y",), (Var("r_1"),))
    assert effect(to_extensional(p)) == effect(to_extensional(q))


def test_inline_nested_calls():
    text = """space x: int[0..3]
sub (r: int[0..3]) := half(p: int[0..3]) r := p div 2 end
sub (r: int[0..3]) := quarter(p: int[0..3]) (r) := half(p); (r) := half(r) end
begin x := quarter(x) + half(x) end"""
    p = parse(text)
    q = inline_calls(p)
    assert q.subs == () and not has_call_expressions(q)
    assert effect(to_extensional(p)) == effect(to_extensional(q))


def test_recursive_call_graph_rejected():
    text = """space n: int[0..3], r: int[0..3]
sub (r: int[0..3]) := cd(n: int[0..3]) if n = 0 -> r := 0 [] n > 0 -> (r) := cd(n - 1) fi end
begin (r) := cd(n) end"""
    with pytest.raises(RecursiveCallGraph):
        inline_calls(parse(text))


def test_call_order_is_callee_first():
    text = """space x: int[0..3]
sub (r: int[0..3]) := b() (r) := a() end
sub (r: int[0..3]) := a() r := 1 end
begin (x) := b() end"""
    assert call_order(parse(text)) == ["a", "b"]


@pytest.mark.parametrize("seed", range(25))
def test_inlining_preserves_effect(seed):
    p = random_ast(seed)
    q = inline_calls(p)
    assert q.subs == () and not has_call_expressions(q)
    assert effect(to_extensional(p)) == effect(to_extensional(q))
