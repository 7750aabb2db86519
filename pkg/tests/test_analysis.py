import random

import pytest
from hypothesis import given, settings, strategies as st

from absprog.analysis import (
    AnalysisError,
    Behaviour,
    EffectRelation,
    Fails,
    Holds,
    Problem,
    SpaceMismatch,
    Unknown,
    effect,
    equivalent,
    solves,
    solves_via_transform,
    verdict_to_json,
)
from absprog.machine import Budget, Summary, to_extensional
from absprog.parser import parse
from absprog.program import Execution, ExtensionalProgram, skip_program
from absprog.state_space import Domain, State, StateSpace, enumerate_states
from absprog.transforms import Rename, Restrict

from generators import random_program, random_state, random_terminating_program

I1 = Domain.integer(0, 1)
X = StateSpace({"x": I1})


def S(**kw):
    return State(kw)


def ext(text, **kw):
    return to_extensional(parse(text), **kw)


def identity_problem(space):
    return Problem(space, {a: {a} for a in enumerate_states(space)})


def with_rows(p, rows):
    table = dict(p.table)
    table.update({a: frozenset(es) for a, es in rows.items()})
    return ExtensionalProgram(p.base, table, p.unknown)


# -- effect ---------------------------------------------------------------------


def test_effect_of_skip():
    rel, unknown = effect(skip_program(X))
    assert rel.graph == {S(x=0): {S(x=0)}, S(x=1): {S(x=1)}} and not unknown


def test_lasso_leaves_domain():
    a = S(x=0)
    p = with_rows(skip_program(X), {a: {Execution([a], [a]), Execution([a, S(x=1)])}})
    rel, _ = effect(p)
    assert a not in rel.domain and S(x=1) in rel.domain


def test_effect_collects_last_states():
    a, b1, b2 = S(x=0), S(x=0), S(x=1)
    p = with_rows(skip_program(X), {a: {Execution([a, b1]), Execution([a, S(x=0, k=3), b2])}})
    assert effect(p)[0].graph[a] == {b1, b2}


def test_effect_unknown_states():
    p = ExtensionalProgram(X, skip_program(X).table, frozenset({S(x=1)}))
    rel, unknown = effect(p)
    assert unknown == {S(x=1)} and rel.domain == {S(x=0)}


def test_effect_json_round_trip():
    p = random_program(random.Random(4))
    rel, unknown = effect(p)
    assert EffectRelation.from_json(rel.to_json(unknown)) == (rel, unknown)


# -- problems -------------------------------------------------------------------


def test_problem_from_condition():
    space = StateSpace({"x": Domain.integer(0, 3)})
    f = Problem.from_condition(space, "x < 2", "x' = x + 1")
    assert f.graph == {S(x=0): {S(x=1)}, S(x=1): {S(x=2)}}


def test_problem_domain_ignores_unsatisfiable_pre_states():
    space = StateSpace({"x": Domain.integer(0, 3)})
    f = Problem.from_condition(space, "true", "x' = x + 1")
    assert S(x=3) not in f.domain and len(f.domain) == 3


def test_problem_json_forms():
    space = StateSpace({"x": I1})
    f = Problem.from_pairs(space, [(S(x=0), S(x=1)), (S(x=1), S(x=0))])
    assert Problem.from_json(f.to_json()) == f
    g = Problem.from_json({"space": space.to_json(), "pre": "true", "post": "x' /= x"})
    assert g == f


def test_problem_rejects_foreign_states():
    with pytest.raises(AnalysisError):
        Problem(X, {S(x=0): {S(x=5)}})
    with pytest.raises(AnalysisError):
        Problem.from_condition(X, "z = 1", "true")


# -- solves ---------------------------------------------------------------------


def test_skip_solves_identity():
    assert solves(identity_problem(X), skip_program(X)) == Holds()


def test_extra_final_state_fails():
    a = S(x=0)
    p = with_rows(skip_program(X), {a: {Execution([a]), Execution([a, S(x=1)])}})
    v = solves(identity_problem(X), p)
    assert isinstance(v, Fails) and [c[0] for c in v.counterexamples] == [a]


def test_divergence_on_problem_domain_fails():
    a = S(x=0)
    p = with_rows(skip_program(X), {a: {Execution([a], [a])}})
    v = solves(identity_problem(X), p)
    assert v.counterexamples == ((a, "diverges"),)


def test_unknown_when_budget_runs_out():
    p = ExtensionalProgram(X, skip_program(X).table, frozenset({S(x=1)}))
    assert solves(identity_problem(X), p) == Unknown((S(x=1),))


def test_definite_failure_beats_unknown():
    a = S(x=1)
    p = ExtensionalProgram(X, {**skip_program(X).table, a: frozenset({Execution([a, S(x=0)])})}, frozenset({a}))
    assert isinstance(solves(identity_problem(X), p), Fails)


def test_space_mismatch():
    with pytest.raises(SpaceMismatch):
        solves(identity_problem(StateSpace({"y": I1})), skip_program(X))


def test_counterexample_limit():
    space = StateSpace({"x": Domain.integer(0, 30)})
    p = ext("space x: int[0..30] begin x := 0 end")
    v = solves(identity_problem(space), p, limit=5)
    assert len(v.counterexamples) == 5 and v.total == 30
    assert verdict_to_json(v)["total"] == 30


def test_verdict_invariants():
    with pytest.raises(AnalysisError):
        Fails(())
    with pytest.raises(AnalysisError):
        Unknown(())


def test_max_program():
    f = Problem.from_condition(
        StateSpace({"x": Domain.integer(0, 3), "y": Domain.integer(0, 3), "m": Domain.integer(0, 3)}),
        "true",
        "(m' = x and x >= y) or (m' = y and y >= x)",
    )
    good = ext("space x: int[0..3], y: int[0..3], m: int[0..3] begin if x >= y -> m := x [] y >= x -> m := y fi end")
    assert solves(f, good) == Holds()
    bad = ext("space x: int[0..3], y: int[0..3], m: int[0..3] begin if x >= y -> m := x fi end")
    assert isinstance(solves(f, bad), Fails)


# -- equivalence ----------------------------------------------------------------


def test_equivalence_examples():
    skip = ext("space x: int[0..1] begin skip end")
    twice = ext("space x: int[0..1] begin x := 1 - x; x := 1 - x end")
    reset = ext("space x: int[0..1] begin x := 0 end")
    assert equivalent(skip, skip) == Holds()
    assert equivalent(skip, twice) == Holds()
    v = equivalent(skip, reset)
    assert isinstance(v, Fails) and [a for a, _ in v.counterexamples] == [S(x=1)]


def test_equivalence_space_mismatch():
    with pytest.raises(SpaceMismatch):
        equivalent(skip_program(X), skip_program(StateSpace({"y": I1})))


def test_equivalence_unknown_and_definite_difference():
    space = StateSpace({"x": I1})
    sums = {a: Summary(frozenset({a}), False, False) for a in enumerate_states(space)}
    exhausted = dict(sums)
    exhausted[S(x=0)] = Summary(frozenset(), False, True)
    assert equivalent(Behaviour(space, sums), Behaviour(space, exhausted)) == Unknown((S(x=0),))
    wrong = dict(sums)
    wrong[S(x=0)] = Summary(frozenset({S(x=1)}), False, True)
    assert isinstance(equivalent(Behaviour(space, sums), Behaviour(space, wrong)), Fails)


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_equivalence_laws(seed):
    rng = random.Random(seed)
    space = StateSpace({"x": Domain.integer(0, 2), "b": Domain.boolean()})
    ps = [random_terminating_program(rng, space) if rng.random() < 0.5 else random_program(rng, space) for _ in range(2)]
    ps.append(ps[0] if rng.random() < 0.5 else ps[1])
    p, q, r = ps
    assert equivalent(p, p) == Holds()
    assert (equivalent(p, q) == Holds()) == (equivalent(q, p) == Holds())
    if equivalent(p, q) == Holds() and equivalent(q, r) == Holds():
        assert equivalent(p, r) == Holds()


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_solution_monotonicity(seed):
    rng = random.Random(seed)
    space = StateSpace({"x": Domain.integer(0, 2), "b": Domain.boolean()})
    p = random_terminating_program(rng, space)
    rel, _ = effect(p)
    # the effect itself is the tightest problem p solves
    f = Problem(space, {a: set(bs) | {random_state(rng, space)} for a, bs in rel.graph.items() if rng.random() < 0.8})
    assert solves(f, p) == Holds()
    weaker = Problem(space, {a: set(bs) | {random_state(rng, space)} for a, bs in f.graph.items() if rng.random() < 0.7})
    assert solves(weaker, p) == Holds()


# -- solving through transforms ---------------------------------------------------


def test_solve_after_restrict():
    p = ext("space x: int[0..1], y: int[0..1] begin x, y := y, x end")
    f = Problem.from_condition(X, "true", "true")
    v, base = solves_via_transform(f, p, [Restrict(X)])
    assert v == Holds() and base == X
    g = identity_problem(X)
    assert isinstance(solves_via_transform(g, p, [Restrict(X)])[0], Fails)


def test_solve_after_rename():
    p = ext("space x: int[0..1] begin x := 1 - x end")
    u = StateSpace({"u": I1})
    flip = Problem(u, {S(u=0): {S(u=1)}, S(u=1): {S(u=0)}})
    assert solves_via_transform(flip, p, [Rename({"x": "u"})]) == (Holds(), u)
    assert isinstance(solves_via_transform(identity_problem(u), p, [Rename({"x": "u"})])[0], Fails)


def test_solve_via_transform_accepts_ast():
    text = "space x: int[0..1] begin skip end"
    assert solves_via_transform(identity_problem(X), parse(text), []) == (Holds(), X)


def test_empty_steps_same_as_solves():
    p = random_program(random.Random(8), X)
    f = identity_problem(X)
    assert solves_via_transform(f, p, [])[0] == solves(f, p)


def test_recursion_budget_gives_unknown():
    text = """space n: int[0..6], r: int[0..6]
sub (r: int[0..6]) := cd(n: int[0..6]) if n = 0 -> r := 0 [] n > 0 -> (r) := cd(n - 1) fi end
begin (r) := cd(n) end"""
    p = ext(text, budget=Budget(max_depth=3))
    f = Problem.from_condition(p.base, "true", "r' = 0 and n' = n")
    v = solves(f, p)
    assert isinstance(v, Unknown) and all(a["n"] >= 3 for a in v.states)
    assert solves(f, ext(text)) == Holds()


@pytest.mark.parametrize("pre,post", [
    ("true", "x' = x"),
    ("x < 2", "x' >= x and b' /= b"),
    ("b", "true"),
    ("x = 1 or b", "x' + x = 2"),
    ("true", "b'"),
])
def test_condition_expansion_matches_brute_force(pre, post):
    from absprog.machine import eval_expr
    from absprog.parser import parse_expr

    space = StateSpace({"x": Domain.integer(0, 2), "b": Domain.boolean()})
    states = list(enumerate_states(space))
    graph = {}
    for a in states:
        if eval_expr(parse_expr(pre), dict(a)):
            image = {b for b in states
                     if eval_expr(parse_expr(post, allow_primes=True), {**a, **{n + "'": v for n, v in b.items()}})}
            if image:
                graph[a] = image
    assert Problem.from_condition(space, pre, post).graph == graph
