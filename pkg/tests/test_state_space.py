import itertools
import math

import pytest
from hypothesis import given, strategies as st

from absprog.program import Execution
from absprog.state_space import (
    BudgetExceeded,
    Domain,
    NotASuperstate,
    State,
    StateSpace,
    StateSpaceError,
    check_renaming,
    enumerate_states,
    fresh_name,
    invert_renaming,
    is_subspace,
    parse_state_in_space,
    project,
    project_sequence,
    spaces_equivalent,
    state_from_json,
    state_to_json,
)

I3 = Domain.integer(0, 3)
B = Domain.boolean()

domains = st.one_of(
    st.just(B),
    st.builds(lambda lo, w: Domain.integer(lo, lo + w), st.integers(-3, 3), st.integers(0, 3)),
    st.sampled_from([Domain.enum(["red", "green"]), Domain.enum(["a", "b", "c"])]),
)
names = st.sampled_from(["a", "b", "x", "y", "z", "k"])
spaces = st.dictionaries(names, domains, max_size=4).map(StateSpace)


def test_domain_validation():
    with pytest.raises(StateSpaceError):
        Domain.integer(3, 2)
    with pytest.raises(StateSpaceError):
        Domain.enum(["a", "a"])
    with pytest.raises(StateSpaceError):
        Domain.enum([])


def test_domain_membership_is_type_strict():
    assert True in B and 1 not in B
    assert 1 in Domain.integer(0, 1) and True not in Domain.integer(0, 1)
    assert "red" in Domain.enum(["red"]) and 0 not in Domain.enum(["red"])
    assert B != Domain.integer(0, 1)


def test_domain_json_round_trip():
    for d in [B, I3, Domain.integer(-2, 5), Domain.enum(["red", "green"])]:
        assert Domain.from_json(d.to_json()) == d
    assert I3.to_json() == {"type": "int", "min": 0, "max": 3}


def test_enumerate_product():
    space = StateSpace({"x": Domain.integer(0, 1), "y": Domain.integer(0, 1)})
    assert len(list(enumerate_states(space))) == 4


def test_enumerate_empty_space():
    assert list(enumerate_states(StateSpace({}))) == []
    assert StateSpace({}).size == 0


def test_enumerate_bool_order():
    assert list(enumerate_states(StateSpace({"b": B}))) == [State({"b": False}), State({"b": True})]


def test_enumerate_order_is_name_then_value():
    space = StateSpace({"y": Domain.integer(0, 1), "x": Domain.integer(0, 1)})
    got = [(s["x"], s["y"]) for s in enumerate_states(space)]
    assert got == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_enumerate_budget():
    space = StateSpace({"x": I3, "y": I3})
    with pytest.raises(BudgetExceeded):
        list(enumerate_states(space, budget=15))
    assert len(list(enumerate_states(space, budget=16))) == 16


@given(spaces)
def test_enumeration_counts_distinct_valid_states(space):
    states = list(enumerate_states(space))
    expected = math.prod(d.size for d in space.values()) if len(space) else 0
    assert len(states) == len(set(states)) == expected == space.size
    assert all(space.contains_state(s) for s in states)


def test_subspace_examples():
    assert is_subspace(StateSpace({"x": I3}), StateSpace({"x": I3, "y": B}))
    a = StateSpace({"x": I3, "y": B})
    assert is_subspace(a, a)
    assert not is_subspace(StateSpace({"x": Domain.integer(0, 2)}), StateSpace({"x": I3}))


@given(spaces, spaces, spaces)
def test_subspace_order_laws(a, b, c):
    assert is_subspace(a, a)
    if is_subspace(a, b) and is_subspace(b, c):
        assert is_subspace(a, c)
    if is_subspace(a, b) and is_subspace(b, a):
        assert a == b


def test_spaces_equivalent_examples():
    assert spaces_equivalent(StateSpace({"x": B}), StateSpace({"y": B})) == {"x": "y"}
    assert spaces_equivalent(StateSpace({"x": B}), StateSpace({"y": Domain.integer(0, 1)})) is None
    assert spaces_equivalent(StateSpace({"x": B, "y": B}), StateSpace({"p": B, "q": B})) == {"x": "p", "y": "q"}


def _brute_equivalent(a, b):
    if len(a) != len(b):
        return None
    src = sorted(a)
    for perm in itertools.permutations(sorted(b)):
        if all(a[s] == b[t] for s, t in zip(src, perm)):
            return dict(zip(src, perm))
    return None


@given(spaces, spaces)
def test_spaces_equivalent_matches_brute_force(a, b):
    # permutations of the sorted targets come out lexicographically, so the
    # first hit is the smallest bijection
    assert spaces_equivalent(a, b) == _brute_equivalent(a, b)


@given(spaces)
def test_spaces_equivalent_symmetry(a):
    renamed = a.rename({n: n + "_r" for n in a})
    nu = spaces_equivalent(a, renamed)
    back = spaces_equivalent(renamed, a)
    assert (nu is None) == (back is None)
    if nu is not None:
        composed = {n: back[nu[n]] for n in a}
        assert all(a[n] == a[m] for n, m in composed.items())
        assert all(a[n] == renamed[nu[n]] for n in a)


def test_project_examples():
    x = StateSpace({"x": I3})
    assert project(State({"x": 1, "y": 2}), x) == State({"x": 1})
    assert project(State({"x": 1}), x) == State({"x": 1})
    seq = [State({"x": 0, "y": 0}), State({"x": 1, "y": 3})]
    assert project_sequence(seq, StateSpace({"y": I3})) == [State({"y": 0}), State({"y": 3})]


def test_project_errors():
    x = StateSpace({"x": I3})
    with pytest.raises(NotASuperstate):
        project(State({"y": 1}), x)
    with pytest.raises(NotASuperstate):
        project(State({"x": True}), x)


def test_project_sequence_edge_cases():
    x = StateSpace({"x": I3})
    assert list(project_sequence([], x)) == []
    assert list(project_sequence([State({"x": 2, "k": 0})], x)) == [State({"x": 2})]
    lasso = Execution([State({"x": 0})], [State({"x": 0, "k": 1})])
    got = project_sequence(lasso, x)
    assert got.cycle == (State({"x": 0}),) and not got.finite


@given(spaces, st.data())
def test_projection_composes(space, data):
    states = list(enumerate_states(space))
    if not states:
        return
    s = data.draw(st.sampled_from(states)).set("aux", 7)
    mid_names = data.draw(st.sets(st.sampled_from(sorted(space)))) if len(space) else set()
    mid = space.subspace(mid_names)
    low = mid.subspace(data.draw(st.sets(st.sampled_from(sorted(mid)))) if len(mid) else set())
    assert project(project(s, mid), low) == project(s, low)


def test_state_is_immutable_and_typed():
    s = State({"x": 1})
    assert State({"x": 1}) != State({"x": True})
    assert s.set("x", 2) == State({"x": 2}) and s == State({"x": 1})
    with pytest.raises(TypeError):
        s["x"] = 3


def test_renaming_maps():
    assert invert_renaming({"x": "y", "y": "z"}) == {"y": "x", "z": "y"}
    with pytest.raises(StateSpaceError):
        check_renaming({"x": "z", "y": "z"})


def test_fresh_name():
    assert fresh_name("k", {"k"}) == "k_1"
    assert fresh_name("k", {"k", "k_1", "k_2"}) == "k_3"
    assert fresh_name("k", set()) == "k"


def test_state_json():
    s = State({"x": 1, "b": True, "c": "red"})
    assert state_from_json(state_to_json(s)) == s
    space = StateSpace({"x": I3, "b": B, "c": Domain.enum(["red", "green"])})
    assert parse_state_in_space({"x": 1, "b": True, "c": "red"}, space) == s
    with pytest.raises(StateSpaceError):
        parse_state_in_space({"x": 9, "b": True, "c": "red"}, space)
    with pytest.raises(StateSpaceError):
        parse_state_in_space({"x": 1}, space)


def test_space_json_sorted():
    space = StateSpace.from_json({"vars": {"y": {"type": "bool"}, "x": {"type": "int", "min": 0, "max": 3}}})
    assert list(space) == ["x", "y"]
    assert StateSpace.from_json(space.to_json()) == space
