"""Independent feasibility check for candidate solutions.

Works row by row from the constraint list, not from the simplex's own
residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Model, Relation


@dataclass(frozen=True)
class Violation:
    kind: str  # "row", "bound" or "integrality"
    name: str
    amount: float

    def __str__(self) -> str:
        return f"{self.kind} {self.name}: violated by {self.amount:.3e}"


def verify_solution(
    model: Model,
    values: np.ndarray,
    feas_tol: float = 1e-7,
    int_tol: float = 1e-6,
    check_integrality: bool = True,
) -> list[Violation]:
    """Return every constraint, bound and integrality violation of ``values``.

    Row tolerances are relative: ``feas_tol * max(1, |rhs|, max |a_j x_j|)``.
    """
    violations: list[Violation] = []

    for var in model.variables:
        x = float(values[var.index])
        scale = max(1.0, abs(x))
        if x < var.lo - feas_tol * scale:
            violations.append(Violation("bound", var.name, var.lo - x))
        elif x > var.hi + feas_tol * scale:
            violations.append(Violation("bound", var.name, x - var.hi))
        if check_integrality and var.is_binary:
            frac = abs(x - round(x))
            if frac > int_tol:
                violations.append(Violation("integrality", var.name, frac))

    for i, con in enumerate(model.constraints):
        activity = 0.0
        magnitude = abs(con.rhs)
        for j, coef in con.terms:
            contribution = coef * float(values[j])
            activity += contribution
            magnitude = max(magnitude, abs(contribution))
        tol = feas_tol * max(1.0, magnitude)
        gap = activity - con.rhs
        name = con.name or f"row{i}"
        if con.relation is Relation.LE and gap > tol:
            violations.append(Violation("row", name, gap))
        elif con.relation is Relation.GE and gap < -tol:
            violations.append(Violation("row", name, -gap))
        elif con.relation is Relation.EQ and abs(gap) > tol:
            violations.append(Violation("row", name, abs(gap)))

    return violations
