"""Walk through the bundled example programs with the library API."""

from pathlib import Path

from absprog.analysis import Problem, effect, equivalent, solves
from absprog.machine import Budget, run_all, to_extensional
from absprog.parser import parse
from absprog.program import format_execution
from absprog.state_space import State, format_state

PROGRAMS = Path(__file__).resolve().parent.parent / "docs" / "programs"


def load(name):
    return parse((PROGRAMS / name).read_text())


def main():
    print("-- executions of the var block from x = false")
    for outcome in run_all(load("varblock.prog"), State({"x": False})):
        print(" ", format_execution(outcome.execution))

    print("-- recursive countdown against its loop")
    rec, loop = to_extensional(load("countdown.prog")), to_extensional(load("countdown_loop.prog"))
    print("  equivalent:", equivalent(rec, loop).kind)
    shallow = to_extensional(load("countdown.prog"), Budget(max_depth=4))
    print("  with four frames, unknown from", len(effect(shallow)[1]), "start states")

    print("-- maximum of two numbers")
    good, broken = load("max.prog"), load("max_broken.prog")
    f = Problem.from_condition(good.space, "true", "(m' = x and x >= y) or (m' = y and y >= x)")
    print("  max solves it:", solves(f, to_extensional(good)).kind)
    v = solves(f, to_extensional(broken), limit=3)
    print("  max_broken:", v.kind, "at", v.total, "states, e.g.")
    for a, why in v.counterexamples:
        print("   ", format_state(a), why)


if __name__ == "__main__":
    main()
