"""``absprog`` command-line front end.

Exit codes: 0 holds / ok, 1 fails / diagnostics, 2 unknown (budget) or
invalid initial state, 3 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import analysis, formats
from .machine import Budget, BudgetExhausted, Machine, ProvenDivergent, format_outcome, summarize_program, to_extensional
from .parser import ParseError, parse
from .program import ExtensionalProgram, ProgramError
from .state_space import (
    BudgetExceeded,
    Domain,
    StateSpace,
    StateSpaceError,
    format_state,
    parse_state_in_space,
    state_to_json,
    states_sorted,
)
from .syntax import Program
from .transforms import (
    Extend,
    InapplicableStep,
    IdentityWitness,
    Rename,
    Restrict,
    TransformError,
    apply_steps,
    check_identical,
    witness_from_json,
)

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    max_steps: int = 100_000
    max_depth: int = 64
    max_states: int = 2**20
    format: str = "text"
    limit: int = analysis.DEFAULT_COUNTEREXAMPLE_LIMIT
    allow_globals: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.format not in ("text", "json"):
            raise UsageError(f"unknown output format {self.format!r}")
        if min(self.max_steps, self.max_depth, self.max_states, self.limit, self.jobs) < 1:
            raise UsageError("budgets, limits and job counts must be positive")

    @property
    def budget(self) -> Budget:
        return Budget(self.max_steps, self.max_depth, self.max_states)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None


class Diagnosed(Exception):
    def __init__(self, path, err: ParseError):
        self.path = path
        self.err = err


def load_program(path: str, cfg: RunConfig) -> Program | ExtensionalProgram:
    """A DSL program, or an extensional program if the file is JSON."""
    text = _read(path)
    if text.lstrip().startswith("{"):
        try:
            return formats.program_from_json(json.loads(text))
        except (json.JSONDecodeError, KeyError, StateSpaceError) as exc:
            raise UsageError(f"{path}: not an extensional program: {exc}") from None
    try:
        return parse(text, allow_globals=cfg.allow_globals)
    except ParseError as err:
        raise Diagnosed(path, err) from None


def load_dsl(path: str, cfg: RunConfig) -> Program:
    p = load_program(path, cfg)
    if not isinstance(p, Program):
        raise UsageError(f"{path}: this command needs a program text, not a table")
    return p


def extensional(p, cfg: RunConfig) -> ExtensionalProgram:
    if isinstance(p, ExtensionalProgram):
        return p
    return to_extensional(p, cfg.budget, cfg.allow_globals, cfg.jobs)


def behaviour(p, cfg: RunConfig) -> analysis.Behaviour:
    if isinstance(p, ExtensionalProgram):
        return analysis.behaviour_of(p)
    return analysis.Behaviour(p.space, summarize_program(p, cfg.budget, cfg.allow_globals, cfg.jobs))


def _emit(out, text: str):
    out.write(text if text.endswith("\n") else text + "\n")


def _space_text(space: StateSpace) -> str:
    return ", ".join(f"{n}: {d}" for n, d in space.items())


# -- commands -------------------------------------------------------------------


def cmd_check(args, cfg, out, err) -> int:
    text = _read(args.program)
    try:
        from .checker import check
        from .parser import parse_raw

        prog, diags = check(parse_raw(text), allow_globals=cfg.allow_globals)
    except ParseError as exc:
        diags = exc.diagnostics
    for d in diags:
        _emit(err, f"{args.program}:{d}")
    if any(d.severity == "error" for d in diags):
        return EXIT_FAIL
    _emit(out, f"{args.program}: ok")
    return EXIT_OK


def _parse_init(text: str, space: StateSpace):
    if text.startswith("@"):
        text = _read(text[1:])
    try:
        return parse_state_in_space(json.loads(text), space)
    except (json.JSONDecodeError, StateSpaceError, AttributeError) as exc:
        raise ValueError(str(exc)) from None


def cmd_trace(args, cfg, out, err) -> int:
    prog = load_dsl(args.program, cfg)
    if args.init is None:
        raise UsageError("trace needs --init STATE")
    try:
        a = _parse_init(args.init, prog.space)
    except ValueError as exc:
        _emit(err, f"invalid initial state: {exc}")
        return EXIT_UNKNOWN
    outcomes = Machine(prog, cfg.allow_globals, cfg.budget).run_all(a)
    if args.mode == "one":
        outcomes = outcomes[:1]
    if cfg.format == "json":
        rows = []
        for o in outcomes:
            if isinstance(o, BudgetExhausted):
                rows.append({"outcome": "budget-exceeded", "reason": o.reason,
                             "prefix": [state_to_json(s) for s in o.prefix]})
            else:
                kind = "divergent" if isinstance(o, ProvenDivergent) else "terminated"
                rows.append({"outcome": kind, "execution": formats.execution_to_json(o.execution)})
        _emit(out, formats.dumps(rows))
    else:
        for o in outcomes:
            _emit(out, format_outcome(o))
    return EXIT_OK


def cmd_effect(args, cfg, out, err) -> int:
    p = load_program(args.program, cfg)
    eff, unknown = analysis.effect(behaviour(p, cfg))
    if cfg.format == "json":
        _emit(out, formats.dumps(eff.to_json(unknown)))
    else:
        lines = [f"space: {_space_text(eff.space)}", f"domain: {len(eff.domain)} state(s)"]
        for a, bs in eff.graph.items():
            lines.append(f"{format_state(a)} -> " + ", ".join(format_state(b) for b in states_sorted(bs)))
        lines.append("unknown: " + (", ".join(format_state(a) for a in states_sorted(unknown)) or "none"))
        _emit(out, "\n".join(lines))
    if unknown:
        _emit(err, f"warning: budget exhausted at {len(unknown)} start state(s); effect is partial")
    return EXIT_OK


def _report(v, cfg, out, extra: dict | None = None) -> int:
    if cfg.format == "json":
        obj = analysis.verdict_to_json(v)
        if extra:
            obj.update(extra)
        _emit(out, formats.dumps(obj))
    else:
        if extra and "space" in extra:
            _emit(out, "transformed base space: " + _space_text(StateSpace.from_json(extra["space"])))
        _emit(out, analysis.format_verdict(v))
    return v.exit_code


def cmd_solves(args, cfg, out, err) -> int:
    try:
        problem = analysis.Problem.from_json(_load_json(args.problem))
    except (KeyError, StateSpaceError, analysis.AnalysisError, ParseError) as exc:
        raise UsageError(f"{args.problem}: invalid problem: {exc}") from None
    p = load_program(args.program, cfg)
    if args.transform:
        w = witness_from_json(_load_json(args.transform))
        q = apply_steps(extensional(p, cfg), w.left)
        b, extra = analysis.behaviour_of(q), {"space": q.base.to_json()}
    else:
        b, extra = behaviour(p, cfg), None
    if b.space != problem.space:
        raise UsageError(
            f"problem space ({_space_text(problem.space)}) differs from the program's base space "
            f"({_space_text(b.space)}); use --transform to fit the program to the problem"
        )
    return _report(analysis.solves(problem, b, cfg.limit), cfg, out, extra)


def cmd_equiv(args, cfg, out, err) -> int:
    p, q = load_program(args.first, cfg), load_program(args.second, cfg)
    bp, bq = behaviour(p, cfg), behaviour(q, cfg)
    if bp.space != bq.space:
        raise UsageError(f"base spaces differ: ({_space_text(bp.space)}) vs ({_space_text(bq.space)})")
    return _report(analysis.equivalent(bp, bq, cfg.limit), cfg, out)


def cmd_identical(args, cfg, out, err) -> int:
    w = witness_from_json(_load_json(args.witness)) if args.witness else IdentityWitness()
    p = extensional(load_program(args.first, cfg), cfg)
    q = extensional(load_program(args.second, cfg), cfg)
    if p.partial or q.partial:
        return _report(analysis.Unknown(tuple(states_sorted(p.unknown | q.unknown))), cfg, out)
    if check_identical(p, q, w):
        return _report(analysis.Holds(), cfg, out)
    if cfg.format == "json":
        _emit(out, formats.dumps({"verdict": "fails", "reason": "transformed programs differ"}))
    else:
        _emit(out, "fails: the transformed programs differ")
    return EXIT_FAIL


class _StepAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        steps = list(getattr(namespace, "steps", None) or [])
        steps.append((self.dest, values))
        namespace.steps = steps


def _parse_decl(text: str) -> tuple[str, Domain]:
    from .parser import Parser

    p = Parser(text)
    name, dom, _ = p.vardecl()
    if p.tok.kind != "eof":
        p.error("unexpected text after declaration")
    return name, dom


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch in "[{":
            depth += 1
        elif ch in "]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [x.strip() for x in parts if x.strip()]


def _steps_from_flags(raw, p: ExtensionalProgram) -> list:
    steps = []
    base = p.base
    for kind, value in raw:
        try:
            if kind in ("rename", "rename_aux"):
                pairs = {}
                for item in _split_top(value):
                    src, sep, dst = item.partition("=")
                    if not sep:
                        raise UsageError(f"--{kind.replace('_', '-')} expects OLD=NEW, got {item!r}")
                    pairs[src.strip()] = dst.strip()
                prev = steps[-1] if steps and isinstance(steps[-1], Rename) else None
                if prev is None:
                    prev = Rename({}, {})
                    steps.append(prev)
                (prev.base if kind == "rename" else prev.aux).update(pairs)
            elif kind == "extend":
                name, dom = _parse_decl(value)
                steps.append(Extend(name, dom))
            elif kind == "restrict":
                comps = {}
                for item in _split_top(value):
                    if ":" in item:
                        name, dom = _parse_decl(item)
                    else:
                        name = item
                        if name not in base:
                            raise UsageError(f"--restrict: {name} is not a base variable")
                        dom = base[name]
                    comps[name] = dom
                steps.append(Restrict(StateSpace(comps)))
        except ParseError as exc:
            raise UsageError(f"--{kind}: {exc}") from None
        # track the base space for later name-only restrictions
        try:
            base = _next_base(base, steps[-1])
        except (TransformError, StateSpaceError):
            pass
    return steps


def _next_base(base: StateSpace, step) -> StateSpace:
    if isinstance(step, Extend):
        return base.add(step.var, step.domain)
    if isinstance(step, Restrict):
        return step.space
    nu = {n: n for n in base}
    nu.update(step.base)
    return base.rename(nu)


def cmd_transform(args, cfg, out, err) -> int:
    p = extensional(load_program(args.program, cfg), cfg)
    steps = _steps_from_flags(getattr(args, "steps", None) or [], p)
    q = apply_steps(p, steps)
    _emit(out, formats.dumps(formats.program_to_json(q)))
    if q.partial:
        _emit(err, f"warning: budget exhausted at {len(q.unknown)} start state(s); table is partial")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-steps", type=int, default=100_000, help="configurations per path (default 100000)")
    common.add_argument("--max-depth", type=int, default=64, help="nested call frames (default 64)")
    common.add_argument("--max-states", type=int, default=2**20, help="start states to enumerate (default 2^20)")
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--allow-globals", action="store_true", help="let subprograms read and write base variables")
    common.add_argument("--limit-counterexamples", type=int, default=analysis.DEFAULT_COUNTEREXAMPLE_LIMIT)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for per-state exploration")

    ap = _Parser(prog="absprog", description="Relational program workbench.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="parse and check a program")
    p.add_argument("program")

    p = sub.add_parser("trace", parents=[common], help="list executions from one start state")
    p.add_argument("program")
    p.add_argument("--init", help="start state as JSON, or @FILE")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--all", dest="mode", action="store_const", const="all")
    mode.add_argument("--one", dest="mode", action="store_const", const="one")
    p.set_defaults(mode="all")

    p = sub.add_parser("effect", parents=[common], help="print the effect relation")
    p.add_argument("program")

    p = sub.add_parser("solves", parents=[common], help="check that a program solves a problem")
    p.add_argument("problem")
    p.add_argument("program")
    p.add_argument("--transform", metavar="WITNESS", help="transform steps applied to the program first")

    p = sub.add_parser("equiv", parents=[common], help="check that two programs have equal effects")
    p.add_argument("first")
    p.add_argument("second")

    p = sub.add_parser("identical", parents=[common], help="check an identity witness")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--witness", metavar="FILE")

    p = sub.add_parser("transform", parents=[common], help="rename, extend or restrict the base space")
    p.add_argument("program")
    p.add_argument("--rename", action=_StepAction, metavar="OLD=NEW[,..]")
    p.add_argument("--rename-aux", dest="rename_aux", action=_StepAction, metavar="OLD=NEW[,..]")
    p.add_argument("--extend", action=_StepAction, metavar="NAME:TYPE")
    p.add_argument("--restrict", action=_StepAction, metavar="NAME[:TYPE][,..]")
    return ap


COMMANDS = {
    "check": cmd_check,
    "trace": cmd_trace,
    "effect": cmd_effect,
    "solves": cmd_solves,
    "equiv": cmd_equiv,
    "identical": cmd_identical,
    "transform": cmd_transform,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = RunConfig(
            args.max_steps, args.max_depth, args.max_states, args.format,
            args.limit_counterexamples, args.allow_globals, args.jobs,
        )
        return COMMANDS[args.command](args, cfg, out, err)
    except Diagnosed as d:
        # exit 1 means "fails" for the checking commands, so bad input is a usage error
        for diag in d.err.diagnostics:
            _emit(err, f"{d.path}:{diag}")
        return EXIT_USAGE
    except InapplicableStep as exc:
        _emit(err, f"error: inapplicable transform, {exc}")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        _emit(err, f"error: {exc}")
        return EXIT_USAGE
    except (UsageError, TransformError, analysis.SpaceMismatch, ProgramError, StateSpaceError) as exc:
        _emit(err, f"error: {exc}")
        return EXIT_USAGE


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
