"""Embedded MILP facility: model building, revised simplex, binary branch-and-bound."""

from .branch_bound import solve_milp
from .lp_format import format_lp, write_lp
from .model import (
    INF,
    LinearConstraint,
    Model,
    Relation,
    Solution,
    SolverOptions,
    SolveStatus,
    VarId,
    VarKind,
)
from .simplex import solve_lp
from .verify import Violation, verify_solution

__all__ = [
    "INF",
    "LinearConstraint",
    "Model",
    "Relation",
    "Solution",
    "SolveStatus",
    "SolverOptions",
    "VarId",
    "VarKind",
    "Violation",
    "format_lp",
    "solve_lp",
    "solve_milp",
    "verify_solution",
    "write_lp",
]
