"""Dempster-Shafer belief combination on simulated quantum circuits."""

from .dst import (
    DSTError,
    Frame,
    FrameMismatchError,
    MassFunction,
    Pignistic,
    PossMF,
    TotalConflictError,
    betp,
    cdbft,
    combine_conjunctive,
    combine_disjunctive,
    combine_exclusive,
    combine_rule,
    index_of_set,
    load_mass,
    negate,
    save_mass,
    set_of_index,
)
from .rules import LoweredPlan, RuleSyntaxError, UnboundVariableError, eval_bool, lower, parse, pretty

__version__ = "0.1.0"
