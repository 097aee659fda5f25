"""Model containers for the embedded MILP solver.

A :class:`Model` is built incrementally (variables, constraints, objective) and
compiled once into sparse arrays. Solvers only ever see the compiled form, so
a model is never mutated while a solve is running.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

INF = math.inf


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    GAP_LIMIT = "gap_limit"
    NUMERICAL = "numerical"


@dataclass(frozen=True)
class VarId:
    """Handle for a declared variable. ``index`` is its column in the compiled model."""

    index: int
    name: str
    kind: VarKind = VarKind.CONTINUOUS
    lo: float = 0.0
    hi: float = INF

    @property
    def is_binary(self) -> bool:
        return self.kind is VarKind.BINARY


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[int, float], ...]
    relation: Relation
    rhs: float
    name: str = ""


@dataclass
class SolverOptions:
    """Tolerances and limits shared by the LP and MILP engines."""

    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    rel_gap: float = 1e-6
    opt_tol: float = 1e-9
    pivot_tol: float = 1e-9
    node_limit: int = 100_000
    time_limit: float = 600.0
    max_iter: int = 500_000
    refactor_every: int = 100
    bland_after: int = 50
    max_restarts: int = 2
    scaling_passes: int = 4


@dataclass
class Solution:
    status: SolveStatus
    values: np.ndarray | None = None
    objective: float = INF
    bound: float = -INF
    mip_gap: float = INF
    iterations: int = 0
    nodes: int = 0
    message: str = ""
    violations: list[str] = field(default_factory=list)

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def value(self, var: VarId) -> float:
        if self.values is None:
            raise ValueError(f"No values available (status={self.status.value})")
        return float(self.values[var.index])

    def array(self, variables: Iterable[VarId]) -> np.ndarray:
        if self.values is None:
            raise ValueError(f"No values available (status={self.status.value})")
        return self.values[[v.index for v in variables]]


@dataclass(frozen=True)
class CompiledModel:
    """Immutable array form of a model: ``min c@x`` s.t. ``A@x (sense) b``, ``lo <= x <= hi``."""

    a: sp.csr_matrix
    sense: np.ndarray  # -1 for <=, 0 for =, +1 for >=
    b: np.ndarray
    c: np.ndarray
    c0: float
    lo: np.ndarray
    hi: np.ndarray
    binary: np.ndarray  # indices of binary columns, ascending

    @property
    def num_vars(self) -> int:
        return int(self.c.shape[0])

    @property
    def num_rows(self) -> int:
        return int(self.b.shape[0])


_SENSE_CODE = {Relation.LE: -1, Relation.EQ: 0, Relation.GE: 1}


class Model:
    """Incrementally built linear model with continuous and binary variables."""

    def __init__(self, name: str = "model") -> None:
        self.name = name
        self._vars: list[VarId] = []
        self._constraints: list[LinearConstraint] = []
        self._objective: dict[int, float] = {}
        self._objective_constant = 0.0
        self._compiled: CompiledModel | None = None

    @property
    def variables(self) -> list[VarId]:
        return list(self._vars)

    @property
    def constraints(self) -> list[LinearConstraint]:
        return list(self._constraints)

    @property
    def objective_terms(self) -> dict[int, float]:
        return dict(self._objective)

    @property
    def objective_constant(self) -> float:
        return self._objective_constant

    @property
    def num_vars(self) -> int:
        return len(self._vars)

    @property
    def num_constraints(self) -> int:
        return len(self._constraints)

    def add_var(
        self,
        name: str,
        lo: float = 0.0,
        hi: float = INF,
        kind: VarKind = VarKind.CONTINUOUS,
    ) -> VarId:
        if kind is VarKind.BINARY:
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        if lo > hi:
            raise ValueError(f"Variable {name}: lower bound {lo} exceeds upper bound {hi}")
        var = VarId(index=len(self._vars), name=name, kind=kind, lo=float(lo), hi=float(hi))
        self._vars.append(var)
        self._compiled = None
        return var

    def add_binary(self, name: str) -> VarId:
        return self.add_var(name, 0.0, 1.0, VarKind.BINARY)

    def add_constraint(
        self,
        terms: Iterable[tuple[VarId, float]],
        relation: Relation,
        rhs: float,
        name: str = "",
    ) -> LinearConstraint:
        merged: dict[int, float] = {}
        for var, coef in terms:
            if var.index >= len(self._vars) or self._vars[var.index] is not var:
                raise ValueError(f"Constraint {name!r} references undeclared variable {var.name}")
            if not math.isfinite(coef):
                raise ValueError(f"Constraint {name!r}: non-finite coefficient for {var.name}")
            merged[var.index] = merged.get(var.index, 0.0) + float(coef)
        if not math.isfinite(rhs):
            raise ValueError(f"Constraint {name!r}: non-finite right-hand side")
        constraint = LinearConstraint(
            terms=tuple((i, c) for i, c in merged.items() if c != 0.0),
            relation=relation,
            rhs=float(rhs),
            name=name,
        )
        self._constraints.append(constraint)
        self._compiled = None
        return constraint

    def set_objective(self, terms: Iterable[tuple[VarId, float]], constant: float = 0.0) -> None:
        self._objective = {}
        self._objective_constant = float(constant)
        for var, coef in terms:
            self.add_objective_term(var, coef)

    def add_objective_term(self, var: VarId, coef: float) -> None:
        if not math.isfinite(coef):
            raise ValueError(f"Objective coefficient for {var.name} is not finite")
        self._objective[var.index] = self._objective.get(var.index, 0.0) + float(coef)
        self._compiled = None

    def compile(self) -> CompiledModel:
        if self._compiled is not None:
            return self._compiled

        n = len(self._vars)
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        for i, con in enumerate(self._constraints):
            for j, coef in con.terms:
                rows.append(i)
                cols.append(j)
                vals.append(coef)
        a = sp.csr_matrix(
            (np.asarray(vals, dtype=float), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(len(self._constraints), n),
        )
        c = np.zeros(n)
        for j, coef in self._objective.items():
            c[j] = coef

        self._compiled = CompiledModel(
            a=a,
            sense=np.array([_SENSE_CODE[con.relation] for con in self._constraints], dtype=np.int8),
            b=np.array([con.rhs for con in self._constraints], dtype=float),
            c=c,
            c0=self._objective_constant,
            lo=np.array([v.lo for v in self._vars], dtype=float),
            hi=np.array([v.hi for v in self._vars], dtype=float),
            binary=np.array([v.index for v in self._vars if v.is_binary], dtype=np.int64),
        )
        return self._compiled

    def relaxed(self) -> Model:
        """Copy of this model with every binary turned into a continuous [0, 1] variable."""
        clone = Model(f"{self.name}_relaxed")
        clone._vars = [
            VarId(v.index, v.name, VarKind.CONTINUOUS, v.lo, v.hi) for v in self._vars
        ]
        clone._constraints = list(self._constraints)
        clone._objective = dict(self._objective)
        clone._objective_constant = self._objective_constant
        return clone

    def objective_value(self, values: np.ndarray) -> float:
        compiled = self.compile()
        return float(compiled.c @ values + compiled.c0)
