"""Executable workbench for relational program semantics.

Programs are relations from base states to executions whose intermediate
states may carry auxiliary variables.  The package covers finite state
spaces, extensional programs, base-space transformations, effects and
solution checking, and a guarded command language with subprograms.
"""

from .analysis import (
    Behaviour,
    EffectRelation,
    Fails,
    Holds,
    Problem,
    Unknown,
    effect,
    equivalent,
    solves,
    solves_via_transform,
)
from .machine import (
    Budget,
    BudgetExhausted,
    Machine,
    ProvenDivergent,
    Terminated,
    run_all,
    summarize_program,
    to_extensional,
)
from .parser import ParseError, parse
from .program import Execution, ExtensionalProgram, executions_from, is_finite, length, validate_program
from .rewrite import desugar_call_expressions, inline_calls
from .state_space import (
    Domain,
    State,
    StateSpace,
    enumerate_states,
    is_subspace,
    project,
    project_sequence,
    spaces_equivalent,
)
from .syntax import format_program
from .transforms import (
    Extend,
    IdentityWitness,
    Rename,
    Restrict,
    check_identical,
    extend,
    extend_to,
    rename,
    restrict,
)

__version__ = "0.1.0"
