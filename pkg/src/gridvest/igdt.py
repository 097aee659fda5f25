"""Info-gap robustness and opportunity radii for PV output and EV demand.

A radius ``alpha`` scales a whole series uniformly: the worst direction
multiplies PV by ``1 - alpha_pv`` and EV demand by ``1 + alpha_ev``, the best
direction the reverse. Every evaluation re-solves the full planning MILP.

Robustness is the largest alpha whose worst-direction cost stays within
``(1 + beta) * anchor``; opportunity the smallest alpha whose best-direction
cost reaches ``(1 - beta) * anchor``. Both are found by bisection, which is
valid because the re-optimized cost is monotone in alpha.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import pandas as pd

from . import core
from .batch_processor import process_batch
from .exceptions import PlanInfeasibleError
from .planner import PlanningProblem, solve_plan

logger = logging.getLogger(__name__)

Direction = Literal["worst", "best"]
Target = Literal["pv", "ev", "joint"]
Mode = Literal["robustness", "opportunity"]

CURVE_COLUMNS = ("beta", "param", "mode", "alpha", "achieved_cost", "iterations", "flags")
SATURATED = "saturated"
UNATTAINABLE = "unattainable"
INFEASIBLE_BEYOND = "infeasible_beyond"


@dataclass(frozen=True)
class DeviationGrid:
    betas: tuple[float, ...]
    mode: Literal["robustness", "opportunity", "both"] = "both"

    def __post_init__(self) -> None:
        if not self.betas:
            raise ValueError("at least one beta is required")
        if any(not 0 <= b <= 1 for b in self.betas):
            raise ValueError("betas must lie in [0, 1]")
        if any(b2 <= b1 for b1, b2 in zip(self.betas, self.betas[1:], strict=False)):
            raise ValueError("betas must be strictly increasing")

    @property
    def modes(self) -> tuple[Mode, ...]:
        if self.mode == "both":
            return ("robustness", "opportunity")
        return (self.mode,)


@dataclass(frozen=True)
class RadiusResult:
    beta: float
    param: Target
    mode: Mode
    alpha: float
    alpha_pv: float
    alpha_ev: float
    coupling: str
    achieved_cost: float
    target_cost: float
    iterations: int
    flags: tuple[str, ...] = ()

    @property
    def failed(self) -> bool:
        return any(f.startswith("failed") for f in self.flags)

    def as_row(self) -> dict[str, Any]:
        return {
            "beta": self.beta,
            "param": self.param,
            "mode": self.mode,
            "alpha": self.alpha,
            "achieved_cost": self.achieved_cost,
            "iterations": self.iterations,
            "flags": ";".join(self.flags),
        }


@dataclass
class IgdtCurve:
    anchor: float
    battery_type: int
    coupling: str
    results: list[RadiusResult] = field(default_factory=list)

    def select(self, mode: Mode, param: Target) -> list[RadiusResult]:
        return [r for r in self.results if r.mode == mode and r.param == param]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.as_row() for r in self.results], columns=list(CURVE_COLUMNS))

    def to_dict(self) -> dict[str, Any]:
        return {
            "anchor_objective": self.anchor,
            "battery_type": self.battery_type,
            "coupling": self.coupling,
            "results": [
                {**r.as_row(), "alpha_pv": r.alpha_pv, "alpha_ev": r.alpha_ev, "target_cost": r.target_cost}
                for r in self.results
            ],
        }


def _factors(alpha_pv: float, alpha_ev: float, direction: Direction) -> tuple[float, float]:
    if direction == "worst":
        return 1.0 - alpha_pv, 1.0 + alpha_ev
    return 1.0 + alpha_pv, 1.0 - alpha_ev


def evaluate_scaled(
    problem: PlanningProblem, alpha_pv: float, alpha_ev: float, direction: Direction
) -> float:
    """Optimal plan cost with PV and EV scaled by the given radii.

    Raises:
        PlanInfeasibleError: The scaled instance has no feasible dispatch
    """
    for name, alpha in (("alpha_pv", alpha_pv), ("alpha_ev", alpha_ev)):
        if not 0 <= alpha <= 1:
            raise ValueError(f"{name} must lie in [0, 1], got {alpha}")
    if direction not in ("worst", "best"):
        raise ValueError(f"direction must be 'worst' or 'best', got {direction!r}")
    if alpha_pv == 0 and alpha_ev == 0:
        return solve_plan(problem).objective
    pv_factor, ev_factor = _factors(alpha_pv, alpha_ev, direction)
    return solve_plan(problem.scaled(pv_factor, ev_factor)).objective


def _radii(target: Target, alpha: float) -> tuple[float, float]:
    if target == "pv":
        return alpha, 0.0
    if target == "ev":
        return 0.0, alpha
    return alpha, alpha


class _CostOracle:
    """Memoized cost of one direction as a function of a single radius."""

    def __init__(self, problem: PlanningProblem, target: Target, direction: Direction, anchor: float) -> None:
        self.problem = problem
        self.target = target
        self.direction = direction
        self.cache: dict[float, float] = {0.0: anchor}

    def __call__(self, alpha: float) -> float:
        if alpha not in self.cache:
            alpha_pv, alpha_ev = _radii(self.target, alpha)
            try:
                self.cache[alpha] = evaluate_scaled(self.problem, alpha_pv, alpha_ev, self.direction)
            except PlanInfeasibleError:
                self.cache[alpha] = math.inf
        return self.cache[alpha]


def _slack(cost: float, options_gap: float) -> float:
    return options_gap * max(1.0, abs(cost))


def _result(
    beta: float,
    target: Target,
    mode: Mode,
    alpha: float,
    coupling: str,
    cost: float,
    target_cost: float,
    iterations: int,
    flags: tuple[str, ...] = (),
) -> RadiusResult:
    alpha_pv, alpha_ev = _radii(target, alpha)
    return RadiusResult(beta, target, mode, alpha, alpha_pv, alpha_ev, coupling, cost, target_cost, iterations, flags)


def _anchor(problem: PlanningProblem, anchor: float | None) -> float:
    return solve_plan(problem).objective if anchor is None else anchor


def _bisect(
    keeps_low: Callable[[float], bool], lo: float, hi: float, alpha_tol: float, max_steps: int
) -> tuple[float, float, int]:
    """Shrink ``[lo, hi]`` while ``keeps_low`` holds at ``lo`` and fails at ``hi``."""
    steps = 0
    while hi - lo > alpha_tol and steps < max_steps:
        mid = 0.5 * (lo + hi)
        steps += 1
        if keeps_low(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi, steps


def feasible_limit(flags: tuple[str, ...]) -> float | None:
    """Radius recorded by an ``infeasible_beyond:<alpha>`` flag, if any."""
    for flag in flags:
        name, _, value = flag.partition(":")
        if name == INFEASIBLE_BEYOND:
            return float(value)
    return None


def robust_radius(
    problem: PlanningProblem,
    beta: float,
    target_param: Target,
    anchor: float | None = None,
    alpha_tol: float = 1e-3,
    max_iter: int = 30,
) -> RadiusResult:
    """Largest uniform radius whose worst-direction cost stays within ``(1 + beta) * anchor``.

    Args:
        problem: Planning instance at nominal PV and EV
        beta: Tolerated relative cost increase, in [0, 1]
        target_param: Which series the radius scales
        anchor: Nominal optimum; solved when omitted
        alpha_tol: Width of the final bisection bracket
        max_iter: Cap on MILP solves

    Returns:
        The radius, its cost and any ``saturated`` flag
    """
    base = _anchor(problem, anchor)
    coupling = "joint" if target_param == "joint" else "independent"
    budget = (1.0 + beta) * base
    if beta == 0:
        return _result(beta, target_param, "robustness", 0.0, coupling, base, budget, 0)

    cost = _CostOracle(problem, target_param, "worst", base)
    tol = _slack(budget, problem.options.rel_gap)

    def fits(alpha: float) -> bool:
        return cost(alpha) <= budget + tol

    if fits(1.0):
        return _result(beta, target_param, "robustness", 1.0, coupling, cost(1.0), budget, 1, (SATURATED,))

    lo, _, steps = _bisect(fits, 0.0, 1.0, alpha_tol, max_iter - 1)
    iterations = 1 + steps
    logger.debug("robust %s beta=%.4g: alpha=%.6f after %d solves", target_param, beta, lo, iterations)
    return _result(beta, target_param, "robustness", lo, coupling, cost(lo), budget, iterations)


def opportunity_radius(
    problem: PlanningProblem,
    beta: float,
    target_param: Target,
    anchor: float | None = None,
    alpha_tol: float = 1e-3,
    max_iter: int = 30,
) -> RadiusResult:
    """Smallest uniform radius whose best-direction cost reaches ``(1 - beta) * anchor``.

    More PV or less EV demand can leave surplus the no-export rule cannot absorb.
    When alpha = 1 is infeasible the search first locates the largest feasible
    radius, records it as ``infeasible_beyond:<alpha>``, and looks for the target
    below it. ``unattainable`` means even that radius misses the target.
    """
    base = _anchor(problem, anchor)
    coupling = "joint" if target_param == "joint" else "independent"
    goal = (1.0 - beta) * base
    if beta == 0:
        return _result(beta, target_param, "opportunity", 0.0, coupling, base, goal, 0)

    cost = _CostOracle(problem, target_param, "best", base)
    tol = _slack(goal, problem.options.rel_gap)

    def reaches(alpha: float) -> bool:
        return cost(alpha) <= goal + tol

    limit, iterations = 1.0, 1
    flags: tuple[str, ...] = ()
    if math.isinf(cost(1.0)):
        limit, _, steps = _bisect(lambda a: math.isfinite(cost(a)), 0.0, 1.0, alpha_tol, max_iter - 1)
        iterations += steps
        flags = (f"{INFEASIBLE_BEYOND}:{limit:.6f}",)
        logger.debug("opportunity %s: infeasible beyond alpha=%.6f", target_param, limit)

    if not reaches(limit):
        return _result(
            beta, target_param, "opportunity", limit, coupling, cost(limit), goal, iterations, (UNATTAINABLE, *flags)
        )

    _, hi, steps = _bisect(lambda a: not reaches(a), 0.0, limit, alpha_tol, max_iter - 1)
    iterations += steps
    logger.debug("opportunity %s beta=%.4g: alpha=%.6f after %d solves", target_param, beta, hi, iterations)
    return _result(beta, target_param, "opportunity", hi, coupling, cost(hi), goal, iterations, flags)


_RADIUS_FUNCTIONS: dict[Mode, Callable[..., RadiusResult]] = {
    "robustness": robust_radius,
    "opportunity": opportunity_radius,
}


def _radius_task(
    mode: Mode,
    problem: PlanningProblem,
    beta: float,
    target: Target,
    anchor: float,
    alpha_tol: float,
    max_iter: int,
) -> RadiusResult:
    return _RADIUS_FUNCTIONS[mode](problem, beta, target, anchor, alpha_tol, max_iter)


def sweep(
    problem: PlanningProblem,
    grid: DeviationGrid,
    coupling: Literal["independent", "joint"] = "independent",
    alpha_tol: float = 1e-3,
    max_iter: int = 30,
    anchor: float | None = None,
    max_workers: int | None = None,
) -> IgdtCurve:
    """Radii for every beta, mode and parameter; failures are flagged, never raised.

    Rows are ordered by beta, then mode (robustness first), then parameter.

    Args:
        problem: Instance at nominal PV and EV
        grid: Betas and the modes to run
        coupling: ``joint`` scales PV and EV by one radius
        alpha_tol: Bisection bracket width
        max_iter: Cap on MILP solves per radius
        anchor: Nominal optimum; solved when omitted
        max_workers: Process cap for the independent radii

    Returns:
        The anchor and every radius result in row order
    """
    base = _anchor(problem, anchor)
    targets: tuple[Target, ...] = ("joint",) if coupling == "joint" else ("pv", "ev")
    tasks = [(beta, mode, target) for beta in grid.betas for mode in grid.modes for target in targets]
    items = [
        (f"{mode}:{target}:{beta:g}", (mode, problem, beta, target, base, alpha_tol, max_iter))
        for beta, mode, target in tasks
    ]
    batch = process_batch(_radius_task, items, "Sweeping uncertainty radii...", max_workers)

    curve = IgdtCurve(anchor=base, battery_type=problem.battery_type, coupling=coupling)
    for (beta, mode, target), detail in zip(tasks, batch.details, strict=True):
        if detail.status == "success":
            result: RadiusResult = detail.value
            logger.info("beta=%g %s %s: alpha=%.4f %s", beta, mode, target, result.alpha, ";".join(result.flags))
        else:
            logger.error("beta=%g %s %s failed: %s", beta, mode, target, detail.error)
            reason = (detail.error or "unknown").split(":")[0]
            result = _result(beta, target, mode, 0.0, coupling, math.nan, math.nan, 0, (f"failed:{reason}",))
        curve.results.append(result)
    return curve


@dataclass(frozen=True)
class BandCheck:
    passed: bool
    cost_at_alpha: float
    cost_beyond: float | None
    message: str


def band_check(
    problem: PlanningProblem, result: RadiusResult, anchor: float, alpha_tol: float = 1e-3
) -> BandCheck:
    """Re-solve at the reported radius and one step of ``2 * alpha_tol`` past it."""
    if result.failed:
        return BandCheck(False, math.nan, None, "radius computation failed")
    direction: Direction = "worst" if result.mode == "robustness" else "best"
    oracle = _CostOracle(problem, result.param, direction, anchor)
    tol = _slack(anchor, problem.options.rel_gap)

    if result.mode == "robustness":
        budget = (1.0 + result.beta) * anchor
        at = oracle(result.alpha)
        if at > budget + tol:
            return BandCheck(False, at, None, f"cost {at:.6g} at alpha exceeds budget {budget:.6g}")
        if SATURATED in result.flags or result.beta == 0:
            return BandCheck(True, at, None, "within budget")
        beyond_alpha = min(1.0, result.alpha + 2 * alpha_tol)
        beyond = oracle(beyond_alpha)
        if beyond <= budget - tol:
            return BandCheck(False, at, beyond, f"alpha {beyond_alpha:.4f} still fits the budget")
        return BandCheck(True, at, beyond, "within band")

    goal = (1.0 - result.beta) * anchor
    at = oracle(result.alpha)
    limit = feasible_limit(result.flags)
    if limit is not None:
        past_alpha = min(1.0, limit + 2 * alpha_tol)
        past = oracle(past_alpha)
        if math.isfinite(past):
            return BandCheck(False, at, past, f"alpha {past_alpha:.4f} is still feasible")
    if UNATTAINABLE in result.flags:
        ok = math.isfinite(at) and at > goal - tol
        message = "unattainable" if ok else f"alpha={result.alpha:.4f} reaches target {goal:.6g} or is infeasible"
        return BandCheck(ok, at, None, message)
    if at > goal + tol:
        return BandCheck(False, at, None, f"cost {at:.6g} at alpha misses target {goal:.6g}")
    if result.beta == 0:
        return BandCheck(True, at, None, "at anchor")
    below_alpha = max(0.0, result.alpha - 2 * alpha_tol)
    below = oracle(below_alpha)
    if below < goal - tol and below_alpha < result.alpha:
        return BandCheck(False, at, below, f"alpha {below_alpha:.4f} already reaches the target")
    return BandCheck(True, at, below, "within band")


def write_curve(curve: IgdtCurve, output_dir: Path, seed: int, stem: str = "igdt_curve") -> list[Path]:
    return [
        core.write_csv(curve.to_frame(), f"{stem}.csv", output_dir, seed),
        core.write_json(curve.to_dict(), f"{stem}.json", output_dir, seed),
    ]


def read_curve(path: str | Path) -> IgdtCurve:
    data = core.read_json(path)
    curve = IgdtCurve(
        anchor=float(data["anchor_objective"]),
        battery_type=int(data["battery_type"]),
        coupling=str(data["coupling"]),
    )
    for row in data["results"]:
        flags = tuple(f for f in str(row.get("flags", "")).split(";") if f)
        curve.results.append(
            RadiusResult(
                beta=float(row["beta"]),
                param=row["param"],
                mode=row["mode"],
                alpha=float(row["alpha"]),
                alpha_pv=float(row["alpha_pv"]),
                alpha_ev=float(row["alpha_ev"]),
                coupling=curve.coupling,
                achieved_cost=float(row["achieved_cost"]) if row["achieved_cost"] is not None else math.nan,
                target_cost=float(row["target_cost"]) if row["target_cost"] is not None else math.nan,
                iterations=int(row["iterations"]),
                flags=flags,
            )
        )
    return curve
