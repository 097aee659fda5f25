"""Bounded-variable revised simplex.

The LP ``min c@x  s.t.  A@x (<=,=,>=) b,  lo <= x <= hi`` is brought to the
equality form ``A@x + s = b`` with one bounded slack per row. Phase I starts
from the slack basis, adding an artificial column for every row whose slack
would fall outside its bounds, and minimizes the artificial sum. Phase II then
minimizes the true objective from the feasible basis Phase I found.

The basis inverse is kept as a sparse LU factorization (``scipy.sparse.linalg.splu``)
followed by a product-form eta file, refactored every ``refactor_every``
pivots. Pricing is Dantzig's largest reduced cost; after ``bland_after``
consecutive degenerate pivots the engine switches to Bland's lowest-index rule
until a step makes progress again.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .model import CompiledModel, Model, Solution, SolverOptions, SolveStatus
from .verify import verify_solution

logger = logging.getLogger(__name__)

AT_LO = 0
AT_HI = 1
FREE = 2
BASIC = 3


class _SingularBasis(Exception):
    pass


@dataclass
class _Eta:
    row: int
    pivot: float
    index: np.ndarray
    values: np.ndarray


class _BasisFactor:
    """LU factorization of a basis plus the eta updates applied since."""

    def __init__(self, a_csc: sp.csc_matrix, basis: np.ndarray) -> None:
        m = basis.shape[0]
        self.etas: list[_Eta] = []
        if m == 0:
            self._lu = None
            return
        try:
            self._lu = splu(a_csc[:, basis].tocsc())
        except RuntimeError as exc:
            raise _SingularBasis(str(exc)) from exc

    def ftran(self, column: np.ndarray) -> np.ndarray:
        v = self._lu.solve(column) if self._lu is not None else column.copy()
        for eta in self.etas:
            vr = v[eta.row] / eta.pivot
            if vr != 0.0:
                v[eta.index] -= eta.values * vr
            v[eta.row] = vr
        if not np.all(np.isfinite(v)):
            raise _SingularBasis("non-finite FTRAN result")
        return v

    def btran(self, cost: np.ndarray) -> np.ndarray:
        w = cost.astype(float, copy=True)
        for eta in reversed(self.etas):
            w[eta.row] = (w[eta.row] - w[eta.index] @ eta.values) / eta.pivot
        y = self._lu.solve(w, trans="T") if self._lu is not None else w
        if not np.all(np.isfinite(y)):
            raise _SingularBasis("non-finite BTRAN result")
        return y

    def push(self, row: int, alpha: np.ndarray, drop_tol: float = 1e-14) -> None:
        index = np.flatnonzero(np.abs(alpha) > drop_tol)
        index = index[index != row]
        self.etas.append(_Eta(row, float(alpha[row]), index, alpha[index].copy()))


def _nonzero_extremes(mat: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    rows = mat.shape[0]
    largest = np.ones(rows)
    smallest = np.ones(rows)
    filled = np.diff(mat.indptr) > 0
    if filled.any():
        starts = mat.indptr[:-1][filled]
        largest[filled] = np.maximum.reduceat(mat.data, starts)
        smallest[filled] = np.minimum.reduceat(mat.data, starts)
    return largest, smallest


def _equilibrate(a: sp.csr_matrix, passes: int) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-mean row/column scaling, rounded to powers of two."""
    m, n = a.shape
    row_scale = np.ones(m)
    col_scale = np.ones(n)
    if passes <= 0 or a.nnz == 0:
        return row_scale, col_scale

    magnitude = abs(a).tocsr()
    magnitude.eliminate_zeros()
    for _ in range(passes):
        scaled = sp.diags(row_scale) @ magnitude @ sp.diags(col_scale)
        hi, lo = _nonzero_extremes(scaled.tocsr())
        row_scale /= np.sqrt(hi * lo)
        scaled = sp.diags(row_scale) @ magnitude @ sp.diags(col_scale)
        hi, lo = _nonzero_extremes(scaled.T.tocsr())
        col_scale /= np.sqrt(hi * lo)

    return np.exp2(np.round(np.log2(row_scale))), np.exp2(np.round(np.log2(col_scale)))


class _RevisedSimplex:
    """Primal simplex iterations over a fixed equality-form matrix."""

    def __init__(
        self,
        a_full: sp.csc_matrix,
        b: np.ndarray,
        lo: np.ndarray,
        hi: np.ndarray,
        options: SolverOptions,
        deadline: float,
    ) -> None:
        self.a = a_full
        self.at = a_full.T.tocsr()
        self.b = b
        self.lo = lo
        self.hi = hi
        self.options = options
        self.deadline = deadline
        self.m = a_full.shape[0]
        self.iterations = 0
        self.basis = np.empty(0, dtype=np.int64)
        self.status = np.empty(0, dtype=np.int8)
        self.x = np.empty(0)
        self.factor: _BasisFactor | None = None

    def load(self, basis: np.ndarray, status: np.ndarray, x: np.ndarray) -> None:
        self.basis = basis.copy()
        self.status = status.copy()
        self.x = x.copy()
        self.factor = None

    def _refactor(self) -> None:
        self.factor = _BasisFactor(self.a, self.basis)
        nonbasic = self.x.copy()
        nonbasic[self.basis] = 0.0
        rhs = self.b - self.a @ nonbasic
        self.x[self.basis] = self.factor.ftran(rhs)

    def run(self, cost: np.ndarray) -> str:
        opts = self.options
        movable = self.hi - self.lo > 0
        degenerate_streak = 0
        bland = False
        fresh = False

        while True:
            if self.iterations >= opts.max_iter:
                return "iteration_limit"
            if time.monotonic() > self.deadline:
                return "time_limit"
            if self.factor is None or len(self.factor.etas) >= opts.refactor_every:
                self._refactor()
                fresh = True
            assert self.factor is not None

            y = self.factor.btran(cost[self.basis])
            d = cost - self.at @ y
            d[self.basis] = 0.0

            eligible = (
                ((self.status == AT_LO) & (d < -opts.opt_tol) & movable)
                | ((self.status == AT_HI) & (d > opts.opt_tol) & movable)
                | ((self.status == FREE) & (np.abs(d) > opts.opt_tol))
            )
            if not eligible.any():
                if fresh:
                    return "optimal"
                # confirm optimality on a clean factorization
                self.factor = None
                continue

            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if d[q] < 0 else -1.0

            column = self.a[:, q].toarray().ravel()
            alpha = self.factor.ftran(column)
            delta = -direction * alpha

            xb = self.x[self.basis]
            ratios = np.full(self.m, math.inf)
            falling = delta < -opts.pivot_tol
            rising = delta > opts.pivot_tol
            with np.errstate(invalid="ignore"):
                ratios[falling] = (xb[falling] - self.lo[self.basis][falling]) / -delta[falling]
                ratios[rising] = (self.hi[self.basis][rising] - xb[rising]) / delta[rising]
            ratios = np.maximum(ratios, 0.0)
            theta = float(ratios.min()) if self.m else math.inf
            flip = float(self.hi[q] - self.lo[q])

            self.iterations += 1
            fresh = False

            if math.isfinite(flip) and flip <= theta:
                self.x[self.basis] = xb + flip * delta
                if self.status[q] == AT_LO:
                    self.x[q] = self.hi[q]
                    self.status[q] = AT_HI
                else:
                    self.x[q] = self.lo[q]
                    self.status[q] = AT_LO
                degenerate_streak = 0
                bland = False
                continue

            if not math.isfinite(theta):
                return "unbounded"

            ties = np.flatnonzero(ratios <= theta + 1e-12 * (1.0 + theta))
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            step = float(ratios[r])

            self.x[self.basis] = xb + step * delta
            self.x[q] += direction * step
            leaving = int(self.basis[r])
            if delta[r] < 0:
                self.x[leaving] = self.lo[leaving]
                self.status[leaving] = AT_LO
            else:
                self.x[leaving] = self.hi[leaving]
                self.status[leaving] = AT_HI
            self.basis[r] = q
            self.status[q] = BASIC
            self.factor.push(r, alpha)

            if step <= 1e-12:
                degenerate_streak += 1
                if degenerate_streak > opts.bland_after and not bland:
                    logger.debug("Switching to Bland's rule after %d degenerate pivots", degenerate_streak)
                    bland = True
            else:
                degenerate_streak = 0
                bland = False


def _solve_without_rows(cm: CompiledModel, lo: np.ndarray, hi: np.ndarray) -> Solution:
    x = np.zeros(cm.num_vars)
    for j, cj in enumerate(cm.c):
        if cj > 0:
            x[j] = lo[j]
        elif cj < 0:
            x[j] = hi[j]
        else:
            x[j] = lo[j] if math.isfinite(lo[j]) else (hi[j] if math.isfinite(hi[j]) else 0.0)
        if not math.isfinite(x[j]):
            return Solution(SolveStatus.UNBOUNDED, message=f"column {j} unbounded")
    objective = float(cm.c @ x + cm.c0)
    return Solution(SolveStatus.OPTIMAL, x, objective, bound=objective, mip_gap=0.0)


def solve_compiled(
    cm: CompiledModel,
    options: SolverOptions | None = None,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
) -> Solution:
    """Solve the LP relaxation of a compiled model, optionally with overridden bounds."""
    opts = options or SolverOptions()
    lo = cm.lo if lower is None else lower
    hi = cm.hi if upper is None else upper
    n, m = cm.num_vars, cm.num_rows

    if np.any(lo > hi + opts.feas_tol):
        return Solution(SolveStatus.INFEASIBLE, message="crossed variable bounds")
    if m == 0:
        return _solve_without_rows(cm, lo, hi)

    deadline = time.monotonic() + opts.time_limit
    row_scale, col_scale = _equilibrate(cm.a, opts.scaling_passes)
    a_s = (sp.diags(row_scale) @ cm.a @ sp.diags(col_scale)).tocsc()
    b_s = row_scale * cm.b
    with np.errstate(invalid="ignore"):
        lo_s = np.where(np.isfinite(lo), lo / col_scale, lo)
        hi_s = np.where(np.isfinite(hi), hi / col_scale, hi)
    c_s = col_scale * cm.c
    c_norm = float(np.abs(c_s).max()) if n else 1.0
    c_norm = c_norm if c_norm > 0 else 1.0
    c_s = c_s / c_norm

    slack_lo = np.where(cm.sense == 1, -math.inf, 0.0)
    slack_hi = np.where(cm.sense == -1, math.inf, 0.0)

    x_struct = np.where(np.isfinite(lo_s), lo_s, np.where(np.isfinite(hi_s), hi_s, 0.0))
    status_struct = np.where(
        np.isfinite(lo_s), AT_LO, np.where(np.isfinite(hi_s), AT_HI, FREE)
    ).astype(np.int8)

    residual = b_s - a_s @ x_struct
    slack_value = np.clip(residual, slack_lo, slack_hi)
    gap = residual - slack_value
    tol_rows = opts.feas_tol * np.maximum(1.0, np.abs(b_s))
    needs_artificial = np.flatnonzero(np.abs(gap) > tol_rows)
    k = needs_artificial.shape[0]

    art_sign = np.sign(gap[needs_artificial])
    art_cols = sp.csc_matrix(
        (art_sign, (needs_artificial, np.arange(k))), shape=(m, k)
    )
    a_full = sp.hstack([a_s, sp.identity(m, format="csc"), art_cols], format="csc")

    total = n + m + k
    lo_full = np.concatenate([lo_s, slack_lo, np.zeros(k)])
    hi_full = np.concatenate([hi_s, slack_hi, np.full(k, math.inf)])

    x = np.concatenate([x_struct, residual, np.abs(gap[needs_artificial])])
    status = np.concatenate([status_struct, np.full(m, BASIC, dtype=np.int8), np.full(k, BASIC, dtype=np.int8)])
    basis = np.arange(n, n + m, dtype=np.int64)
    art_index = np.arange(n + m, total, dtype=np.int64)
    if k:
        slack_index = n + needs_artificial
        x[slack_index] = slack_value[needs_artificial]
        status[slack_index] = np.where(
            slack_value[needs_artificial] <= slack_lo[needs_artificial], AT_LO, AT_HI
        )
        basis[needs_artificial] = art_index

    initial = (basis, status, x)
    engine = _RevisedSimplex(a_full, b_s, lo_full, hi_full, opts, deadline)
    restarts = 0
    outcome = ""

    while True:
        try:
            engine.lo = lo_full.copy()
            engine.hi = hi_full.copy()
            engine.load(*initial)
            if k:
                phase_one_cost = np.zeros(total)
                phase_one_cost[art_index] = 1.0
                outcome = engine.run(phase_one_cost)
                if outcome != "optimal":
                    break
                infeasibility = float(engine.x[art_index].sum())
                if infeasibility > opts.feas_tol * max(1.0, float(np.abs(b_s).max())):
                    return Solution(
                        SolveStatus.INFEASIBLE,
                        iterations=engine.iterations,
                        message=f"phase one ended with infeasibility {infeasibility:.3e}",
                    )
                engine.hi[art_index] = 0.0
                nonbasic_art = art_index[engine.status[art_index] != BASIC]
                engine.x[nonbasic_art] = 0.0
                engine.status[nonbasic_art] = AT_LO
                engine.factor = None
            phase_two_cost = np.zeros(total)
            phase_two_cost[:n] = c_s
            outcome = engine.run(phase_two_cost)
            break
        except _SingularBasis as exc:
            restarts += 1
            logger.warning("Singular basis (%s); restart %d of %d", exc, restarts, opts.max_restarts)
            if restarts > opts.max_restarts:
                return Solution(
                    SolveStatus.NUMERICAL,
                    iterations=engine.iterations,
                    message=f"singular basis after {opts.max_restarts} restarts: {exc}",
                )
            opts = SolverOptions(**{**vars(opts), "bland_after": 0})
            engine.options = opts

    if outcome == "unbounded":
        return Solution(SolveStatus.UNBOUNDED, iterations=engine.iterations, message="unbounded ray found")
    if outcome != "optimal":
        return Solution(SolveStatus.NUMERICAL, iterations=engine.iterations, message=outcome)

    values = engine.x[:n] * col_scale
    values = np.clip(values, lo, hi)
    objective = float(cm.c @ values + cm.c0)
    return Solution(
        SolveStatus.OPTIMAL,
        values,
        objective,
        bound=objective,
        mip_gap=0.0,
        iterations=engine.iterations,
    )


def solve_lp(
    model: Model,
    options: SolverOptions | None = None,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
) -> Solution:
    """Solve the LP relaxation of ``model`` (binaries treated as [0, 1] continuous).

    An optimal answer is re-checked row by row; if the check fails the solve is
    repeated without scaling, and a second failure is reported as ``numerical``.

    Args:
        model: Program to relax
        options: Tolerances; defaults to ``SolverOptions()``
        lower: Column lower bounds replacing the model's, e.g. fixed binaries
        upper: Column upper bounds replacing the model's

    Returns:
        Solution with status, objective and column values when optimal
    """
    opts = options or SolverOptions()
    compiled = model.compile()
    solution = solve_compiled(compiled, opts, lower, upper)
    if not solution.is_optimal or solution.values is None:
        return solution

    violations = _violations_under(model, solution.values, lower, upper, opts)
    if not violations:
        return solution

    logger.debug("LP answer failed verification (%s); retrying unscaled", violations[0])
    retry = solve_compiled(compiled, SolverOptions(**{**vars(opts), "scaling_passes": 0}), lower, upper)
    if retry.is_optimal and retry.values is not None:
        violations = _violations_under(model, retry.values, lower, upper, opts)
        if not violations:
            return retry
    return Solution(
        SolveStatus.NUMERICAL,
        iterations=solution.iterations + retry.iterations,
        message="solution failed independent verification",
        violations=[str(v) for v in violations[:20]],
    )


def _violations_under(
    model: Model,
    values: np.ndarray,
    lower: np.ndarray | None,
    upper: np.ndarray | None,
    opts: SolverOptions,
) -> list[str]:
    found = [
        str(v)
        for v in verify_solution(model, values, opts.feas_tol, opts.int_tol, check_integrality=False)
    ]
    if lower is not None:
        worst = np.flatnonzero(values < lower - opts.feas_tol * np.maximum(1.0, np.abs(values)))
        found.extend(f"bound override x{j}" for j in worst[:5])
    if upper is not None:
        worst = np.flatnonzero(values > upper + opts.feas_tol * np.maximum(1.0, np.abs(values)))
        found.extend(f"bound override x{j}" for j in worst[:5])
    return found
