"""Battery investment planning model.

One model per duration type ``b``. Per slot it carries charge, discharge,
state of charge, grid import, a charge indicator and (optionally) PV
curtailment; per year the newly installed capacity and the cumulative
capacity. The objective is discounted investment plus discounted grid
purchases, with representative days weighted by their day count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cmp_to_key
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from . import core
from .batch_processor import process_batch
from .exceptions import NumericalFailureError, PlanInfeasibleError, SolveError
from .milp import INF, Model, Relation, SolverOptions, SolveStatus, VarId, solve_milp
from .models.config import BATTERY_TYPES, RunConfig
from .pv import PvParams, build_pv_profile
from .timeseries import (
    HOURS_PER_DAY,
    BatteryCatalog,
    EconomicParams,
    ScenarioData,
    TimeGrid,
    discount_factors,
    load_catalog,
    load_scenario,
    synth_scenario,
)

logger = logging.getLogger(__name__)

DISPATCH_COLUMNS = ("y", "q", "d", "t", "p_pv", "p_utility", "p_ch", "p_dis", "soc", "curtail")


@dataclass(frozen=True, eq=False)
class PlanningProblem:
    grid: TimeGrid
    scenario: ScenarioData
    pv_profile: np.ndarray  # kW per slot
    catalog: BatteryCatalog
    econ: EconomicParams
    battery_type: int
    capacity_year_cap: float  # kWh per year
    big_m: float = math.nan  # kW; nan means capacity_year_cap * years / b
    allow_curtailment: bool = False
    force_zero_capacity: bool = False
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self) -> None:
        if self.battery_type not in self.catalog.types:
            raise ValueError(f"battery type {self.battery_type}h not in catalog {self.catalog.types}")
        if not self.capacity_year_cap > 0:
            raise ValueError("capacity_year_cap must be positive")
        if self.catalog.horizon < self.grid.years:
            raise ValueError(f"catalog covers {self.catalog.horizon} years, grid needs {self.grid.years}")
        if self.scenario.grid != self.grid:
            raise ValueError("scenario grid differs from planning grid")
        pv = np.array(self.pv_profile, dtype=float)
        if pv.shape != (self.grid.num_slots,):
            raise ValueError(f"pv_profile has shape {pv.shape}, grid needs ({self.grid.num_slots},)")
        pv.setflags(write=False)
        object.__setattr__(self, "pv_profile", pv)

        floor = self.capacity_year_cap * self.grid.years / self.battery_type
        if math.isnan(self.big_m):
            object.__setattr__(self, "big_m", floor)
        elif self.big_m < floor * (1 - 1e-12):
            raise ValueError(f"big_m {self.big_m} is below capacity_year_cap * years / b = {floor}")

    @property
    def demand(self) -> np.ndarray:
        return self.scenario.residential_load + self.scenario.ev_demand

    @property
    def gamma(self) -> np.ndarray:
        return discount_factors(self.econ, self.grid.years)

    def with_type(self, battery_type: int) -> PlanningProblem:
        return replace(self, battery_type=battery_type, big_m=math.nan)

    def no_battery(self) -> PlanningProblem:
        """Baseline with installed capacity forced to zero (grid and PV only)."""
        return replace(self, force_zero_capacity=True)

    def scaled(self, pv_factor: float = 1.0, ev_factor: float = 1.0) -> PlanningProblem:
        """Same problem with PV output and EV demand multiplied uniformly."""
        if pv_factor < 0 or ev_factor < 0:
            raise ValueError("scaling factors must be non-negative")
        scenario = self.scenario.with_series(ev_demand=self.scenario.ev_demand * ev_factor)
        return replace(self, scenario=scenario, pv_profile=self.pv_profile * pv_factor)


@dataclass
class _Variables:
    cap: list[VarId]
    capcum: list[VarId]
    p_ch: list[VarId]
    p_dis: list[VarId]
    soc: list[VarId]
    p_util: list[VarId]
    charging: list[VarId]
    curtail: list[VarId] | None


@dataclass
class PlanSolution:
    battery_type: int
    status: SolveStatus
    cap_per_year: np.ndarray
    cap_cumulative: np.ndarray
    p_pv: np.ndarray
    p_ch: np.ndarray
    p_dis: np.ndarray
    soc: np.ndarray
    p_utility: np.ndarray
    charge_indicator: np.ndarray
    curtailment: np.ndarray
    cost_per_kwh: np.ndarray
    gamma: np.ndarray
    capex_by_year: np.ndarray  # discounted
    opex_by_year: np.ndarray  # discounted
    capex_nominal_by_year: np.ndarray
    opex_nominal_by_year: np.ndarray
    objective: float
    mip_gap: float = 0.0
    nodes: int = 0
    iterations: int = 0
    baseline: bool = False

    @property
    def capex(self) -> float:
        return float(self.capex_by_year.sum())

    @property
    def opex(self) -> float:
        return float(self.opex_by_year.sum())

    @property
    def total_capacity(self) -> float:
        return float(self.cap_per_year.sum())

    @property
    def label(self) -> str:
        return "baseline" if self.baseline else f"type{self.battery_type}"


def _slot_names(grid: TimeGrid) -> list[str]:
    return [f"{y}_{q}_{d}_{t}" for y, q, d, t in grid.coordinates.tolist()]


def _add_variables(model: Model, problem: PlanningProblem) -> _Variables:
    grid = problem.grid
    names = _slot_names(grid)
    cap_hi = 0.0 if problem.force_zero_capacity else problem.capacity_year_cap
    cap = [model.add_var(f"cap_{y}", 0.0, cap_hi) for y in range(1, grid.years + 1)]
    capcum = [model.add_var(f"capcum_{y}", 0.0, INF) for y in range(1, grid.years + 1)]
    p_ch = [model.add_var(f"pch_{n}") for n in names]
    p_dis = [model.add_var(f"pdis_{n}") for n in names]
    soc = [model.add_var(f"soc_{n}") for n in names]
    p_util = [model.add_var(f"putil_{n}") for n in names]
    charging = [model.add_binary(f"B_{n}") for n in names]
    curtail = None
    if problem.allow_curtailment:
        curtail = [model.add_var(f"curt_{n}", 0.0, float(pv)) for n, pv in zip(names, problem.pv_profile, strict=True)]
    return _Variables(cap, capcum, p_ch, p_dis, soc, p_util, charging, curtail)


def build_model(problem: PlanningProblem) -> Model:
    """Encode ``problem`` as a MILP over the slots of its grid."""
    model, _ = _build(problem)
    return model


def _build(problem: PlanningProblem) -> tuple[Model, _Variables]:
    grid = problem.grid
    b = problem.battery_type
    eta_ch = problem.catalog.charge_eff
    eta_dis = problem.catalog.discharge_eff
    big_m = problem.big_m
    model = Model(f"plan_type{b}h{'_baseline' if problem.force_zero_capacity else ''}")
    v = _add_variables(model, problem)

    for y in range(grid.years):
        terms = [(v.capcum[y], 1.0), (v.cap[y], -1.0)]
        if y > 0:
            terms.append((v.capcum[y - 1], -1.0))
        model.add_constraint(terms, Relation.EQ, 0.0, f"capcum_{y + 1}")

    names = _slot_names(grid)
    year_idx = grid.slot_years - 1
    net_demand = problem.demand - problem.pv_profile
    for k, name in enumerate(names):
        capcum = v.capcum[int(year_idx[k])]
        prev = k - 1 if k % HOURS_PER_DAY else k + HOURS_PER_DAY - 1
        model.add_constraint(
            [(v.soc[k], 1.0), (v.soc[prev], -1.0), (v.p_ch[k], -eta_ch), (v.p_dis[k], 1.0 / eta_dis)],
            Relation.EQ,
            0.0,
            f"soc_{name}",
        )
        model.add_constraint([(v.soc[k], 1.0), (capcum, -1.0)], Relation.LE, 0.0, f"socmax_{name}")
        model.add_constraint([(v.p_ch[k], 1.0), (v.charging[k], -big_m)], Relation.LE, 0.0, f"chM_{name}")
        model.add_constraint([(v.p_dis[k], 1.0), (v.charging[k], big_m)], Relation.LE, big_m, f"disM_{name}")
        model.add_constraint([(v.p_ch[k], float(b)), (capcum, -1.0)], Relation.LE, 0.0, f"chrate_{name}")
        model.add_constraint([(v.p_dis[k], float(b)), (capcum, -1.0)], Relation.LE, 0.0, f"disrate_{name}")
        balance = [(v.p_util[k], 1.0), (v.p_ch[k], -1.0), (v.p_dis[k], 1.0)]
        if v.curtail is not None:
            balance.append((v.curtail[k], -1.0))
        model.add_constraint(balance, Relation.EQ, float(net_demand[k]), f"bal_{name}")

    gamma = problem.gamma
    costs = problem.catalog.costs_for(b, grid.years)
    objective: list[tuple[VarId, float]] = [
        (v.cap[y], float(gamma[y] * costs[y])) for y in range(grid.years)
    ]
    energy_cost = gamma[year_idx] * grid.slot_weights * problem.scenario.utility_price
    objective.extend((v.p_util[k], float(c)) for k, c in enumerate(energy_cost) if c != 0.0)
    model.set_objective(objective)
    return model, v


def surplus_slot(problem: PlanningProblem) -> tuple[int, int, int, int] | None:
    """First slot whose PV surplus exceeds the fastest charge any plan could reach."""
    surplus = problem.pv_profile - problem.demand
    if problem.allow_curtailment or not (surplus > 0).any():
        return None
    if problem.force_zero_capacity:
        absorbable = np.zeros_like(surplus)
    else:
        absorbable = problem.capacity_year_cap * problem.grid.slot_years / problem.battery_type
    over = surplus > absorbable * (1 + 1e-9)
    position = int(np.argmax(over)) if over.any() else int(np.argmax(surplus))
    return problem.grid.slot(position)


def _yearly_sum(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    return np.bincount(grid.slot_years - 1, weights=values, minlength=grid.years)


def _extract(problem: PlanningProblem, v: _Variables, values: np.ndarray, status: SolveStatus) -> PlanSolution:
    grid = problem.grid

    def take(vars_: list[VarId]) -> np.ndarray:
        return values[[x.index for x in vars_]].copy()

    cap = take(v.cap)
    p_util = take(v.p_util)
    gamma = problem.gamma
    costs = problem.catalog.costs_for(problem.battery_type, grid.years)
    capex_nominal = cap * costs
    opex_nominal = _yearly_sum(grid.slot_weights * problem.scenario.utility_price * p_util, grid)
    capex = gamma * capex_nominal
    opex = gamma * opex_nominal
    return PlanSolution(
        battery_type=problem.battery_type,
        status=status,
        cap_per_year=cap,
        cap_cumulative=take(v.capcum),
        p_pv=np.array(problem.pv_profile),
        p_ch=take(v.p_ch),
        p_dis=take(v.p_dis),
        soc=take(v.soc),
        p_utility=p_util,
        charge_indicator=np.round(take(v.charging)),
        curtailment=take(v.curtail) if v.curtail is not None else np.zeros(grid.num_slots),
        cost_per_kwh=costs,
        gamma=gamma,
        capex_by_year=capex,
        opex_by_year=opex,
        capex_nominal_by_year=capex_nominal,
        opex_nominal_by_year=opex_nominal,
        objective=float(capex.sum() + opex.sum()),
        baseline=problem.force_zero_capacity,
    )


def solve_plan(problem: PlanningProblem) -> PlanSolution:
    """Build and solve the planning MILP for one battery type.

    Args:
        problem: Instance to solve; ``no_battery()`` instances give the baseline

    Returns:
        Yearly capacity, per-slot dispatch and the discounted cost split

    Raises:
        PlanInfeasibleError: No dispatch satisfies the no-export rule
        NumericalFailureError: The LP engine broke down
        SolveError: Any other non-usable status
    """
    model, v = _build(problem)
    logger.info(
        "Solving %s: %d variables, %d constraints", model.name, model.num_vars, model.num_constraints
    )
    solution = solve_milp(model, problem.options)

    if solution.status is SolveStatus.INFEASIBLE:
        raise PlanInfeasibleError(problem.battery_type, surplus_slot(problem))
    if solution.status is SolveStatus.NUMERICAL:
        raise NumericalFailureError("; ".join(solution.violations[:5]) or solution.message)
    if solution.values is None:
        raise SolveError(
            f"Planning model for type {problem.battery_type}h ended with status {solution.status.value}",
            solution.message or None,
            status=solution.status.value,
        )
    if solution.status is SolveStatus.GAP_LIMIT:
        logger.warning(
            "%s stopped at the node/time limit with gap %.3g; using best incumbent",
            model.name,
            solution.mip_gap,
        )

    plan = _extract(problem, v, solution.values, solution.status)
    plan.mip_gap = solution.mip_gap
    plan.nodes = solution.nodes
    plan.iterations = solution.iterations
    drift = abs(plan.objective - solution.objective) / max(1.0, abs(solution.objective))
    if drift > 1e-6:
        logger.warning("%s: recomputed objective differs from solver by %.3g (relative)", model.name, drift)
    logger.info(
        "%s: objective %.2f (capex %.2f, opex %.2f), %d nodes",
        model.name,
        plan.objective,
        plan.capex,
        plan.opex,
        plan.nodes,
    )
    return plan


def audit_plan(problem: PlanningProblem, plan: PlanSolution, tol: float | None = None) -> list[str]:
    """Re-check every dispatch invariant of ``plan`` against ``problem``; empty means clean."""
    feas = problem.options.feas_tol if tol is None else tol
    grid = problem.grid
    b = problem.battery_type
    eta_ch = problem.catalog.charge_eff
    eta_dis = problem.catalog.discharge_eff
    findings: list[str] = []

    def scaled(x: np.ndarray | float) -> np.ndarray:
        return feas * np.maximum(1.0, np.abs(x))

    running = np.cumsum(plan.cap_per_year)
    if np.any(np.abs(plan.cap_cumulative - running) > scaled(running)):
        findings.append("cumulative capacity is not the running sum of yearly capacity")
    if problem.force_zero_capacity and np.any(plan.cap_per_year > feas):
        findings.append("baseline plan installs capacity")

    cap_slot = plan.cap_cumulative[grid.slot_years - 1]
    checks = {
        "SoC below zero": plan.soc < -scaled(plan.soc),
        "SoC above installed capacity": plan.soc > cap_slot + scaled(cap_slot),
        "charge rate above capacity/b": plan.p_ch > cap_slot / b + scaled(cap_slot),
        "discharge rate above capacity/b": plan.p_dis > cap_slot / b + scaled(cap_slot),
        "negative charge": plan.p_ch < -scaled(plan.p_ch),
        "negative discharge": plan.p_dis < -scaled(plan.p_dis),
        "grid export": plan.p_utility < -feas,
    }
    threshold = problem.options.int_tol * problem.big_m
    checks["simultaneous charge and discharge"] = (plan.p_ch > threshold) & (plan.p_dis > threshold)

    demand = problem.demand
    residual = problem.pv_profile + plan.p_utility - plan.p_ch + plan.p_dis - plan.curtailment - demand
    magnitude = np.maximum.reduce([demand, problem.pv_profile, plan.p_utility, plan.p_ch, plan.p_dis])
    checks["power balance residual"] = np.abs(residual) > scaled(magnitude)
    for label, mask in checks.items():
        if mask.any():
            y, q, d, t = grid.slot(int(np.argmax(mask)))
            findings.append(f"{label} in {int(mask.sum())} slot(s), first at (y={y},q={q},d={d},t={t})")

    net = (eta_ch * plan.p_ch - plan.p_dis / eta_dis).reshape(grid.num_days, HOURS_PER_DAY)
    flow = (plan.p_ch + plan.p_dis).reshape(grid.num_days, HOURS_PER_DAY).max(axis=1)
    bad_days = np.abs(net.sum(axis=1)) > HOURS_PER_DAY * scaled(flow)
    if bad_days.any():
        findings.append(f"daily energy balance broken on {int(bad_days.sum())} day(s)")

    recomputed = audit_objective(problem, plan)
    if abs(recomputed - plan.objective) > 1e-6 * max(1.0, abs(recomputed)):
        findings.append(f"objective {plan.objective:.6f} differs from recomputed {recomputed:.6f}")
    return findings


def audit_objective(problem: PlanningProblem, plan: PlanSolution) -> float:
    """Capex plus Opex recomputed from plan values and problem data only."""
    grid = problem.grid
    gamma = problem.gamma
    costs = problem.catalog.costs_for(problem.battery_type, grid.years)
    capex = float(np.sum(gamma * costs * plan.cap_per_year))
    energy = gamma[grid.slot_years - 1] * grid.slot_weights * problem.scenario.utility_price
    return capex + float(np.sum(energy * plan.p_utility))


def plan_yearly_costs(plan: PlanSolution, start_year: int | None = None) -> pd.DataFrame:
    years = np.arange(1, len(plan.cap_per_year) + 1)
    frame = pd.DataFrame(
        {
            "year": years,
            "capacity": plan.cap_per_year,
            "capacity_cumulative": plan.cap_cumulative,
            "capex": plan.capex_by_year,
            "opex": plan.opex_by_year,
            "capex_nominal": plan.capex_nominal_by_year,
            "opex_nominal": plan.opex_nominal_by_year,
        }
    )
    if start_year is not None:
        frame.insert(1, "calendar_year", years + start_year - 1)
    return frame


def dispatch_frame(problem: PlanningProblem, plan: PlanSolution) -> pd.DataFrame:
    coords = problem.grid.coordinates
    return pd.DataFrame(
        {
            "y": coords[:, 0],
            "q": coords[:, 1],
            "d": coords[:, 2],
            "t": coords[:, 3],
            "p_pv": plan.p_pv,
            "p_utility": plan.p_utility,
            "p_ch": plan.p_ch,
            "p_dis": plan.p_dis,
            "soc": plan.soc,
            "curtail": plan.curtailment,
        },
        columns=list(DISPATCH_COLUMNS),
    )


def plan_summary(problem: PlanningProblem, plan: PlanSolution) -> dict[str, Any]:
    yearly = plan_yearly_costs(plan, problem.catalog.start_year)
    yearly["cost_per_kwh"] = plan.cost_per_kwh
    yearly["gamma"] = plan.gamma
    return {
        "battery_type": plan.battery_type,
        "baseline": plan.baseline,
        "status": plan.status.value,
        "objective": plan.objective,
        "capex": plan.capex,
        "opex": plan.opex,
        "mip_gap": plan.mip_gap,
        "nodes": plan.nodes,
        "charge_eff": problem.catalog.charge_eff,
        "discharge_eff": problem.catalog.discharge_eff,
        "big_m": problem.big_m,
        "feas_tol": problem.options.feas_tol,
        "int_tol": problem.options.int_tol,
        "representative_day": problem.grid.representative_day,
        "years": yearly.to_dict(orient="records"),
    }


def export_plan(problem: PlanningProblem, plan: PlanSolution, output_dir: Path, seed: int) -> list[Path]:
    """Write ``dispatch_<label>.csv`` and ``plan_<label>.json``."""
    return [
        core.write_csv(dispatch_frame(problem, plan), f"dispatch_{plan.label}.csv", output_dir, seed),
        core.write_json(plan_summary(problem, plan), f"plan_{plan.label}.json", output_dir, seed),
    ]


@dataclass
class TypeResult:
    battery_type: int
    plan: PlanSolution | None = None
    error: str | None = None
    rank: int | None = None
    winner: bool = False

    @property
    def ok(self) -> bool:
        return self.plan is not None


def compare_types(
    base: PlanningProblem,
    types: list[int] | tuple[int, ...] = BATTERY_TYPES,
    max_workers: int | None = None,
) -> list[TypeResult]:
    """Solve every type independently; successful results come first, sorted by objective.

    Objectives within the solver gap of each other count as tied and rank by
    type, shortest duration first.

    Args:
        base: Instance whose battery type is replaced for each solve
        types: Duration types to solve
        max_workers: Process cap; None uses the CPU count, capped by ``GRIDVEST_THREADS``

    Returns:
        One result per type with its rank, winner first; failed types last
    """
    items = [(f"type{b}h", (base.with_type(b),)) for b in types]
    batch = process_batch(solve_plan, items, "Solving battery types...", max_workers)

    results = []
    for b, detail in zip(types, batch.details, strict=True):
        if detail.status == "success":
            results.append(TypeResult(b, plan=detail.value))
        else:
            logger.error("Type %dh failed: %s", b, detail.error)
            results.append(TypeResult(b, error=detail.error))

    tol = base.options.rel_gap

    def order(a: TypeResult, b: TypeResult) -> int:
        cost_a, cost_b = a.plan.objective, b.plan.objective  # type: ignore[union-attr]
        if abs(cost_a - cost_b) > tol * max(1.0, abs(cost_a), abs(cost_b)):
            return -1 if cost_a < cost_b else 1
        return a.battery_type - b.battery_type

    solved = sorted((r for r in results if r.plan is not None), key=cmp_to_key(order))
    for rank, result in enumerate(solved, start=1):
        result.rank = rank
    if solved:
        solved[0].winner = True
    return solved + [r for r in results if r.plan is None]


@dataclass(frozen=True, eq=False)
class PlanningInputs:
    grid: TimeGrid
    scenario: ScenarioData
    catalog: BatteryCatalog
    econ: EconomicParams
    pv_profile: np.ndarray
    clamped_slots: int
    synthetic: bool


def default_capacity_cap(scenario: ScenarioData, pv_profile: np.ndarray) -> float:
    """A day's worth of the largest hourly flow, rounded up to 100 kWh."""
    peak = float(np.max(scenario.residential_load + scenario.ev_demand + pv_profile, initial=0.0))
    return max(100.0, math.ceil(HOURS_PER_DAY * peak / 100.0) * 100.0)


def load_inputs(config: RunConfig) -> PlanningInputs:
    """Read (or synthesize) the scenario and catalog a run configuration names."""
    grid_cfg = config.grid
    grid = TimeGrid(
        years=grid_cfg.years,
        quarter_days=tuple(grid_cfg.quarter_days),
        representative_day=grid_cfg.representative_day,
    )
    if config.paths.scenario is not None:
        scenario = load_scenario(config.paths.scenario, grid, config.units.price)
        synthetic = False
    else:
        logger.info("No scenario file configured; generating synthetic data (seed=%d)", config.seed)
        scenario = synth_scenario(config.seed, grid, config.synth)
        synthetic = True
    catalog = load_catalog(
        config.paths.catalog,
        grid.years,
        start_year=grid_cfg.start_year,
        charge_eff=config.battery.charge_eff,
        discharge_eff=config.battery.discharge_eff,
    )
    profile, clamp = build_pv_profile(scenario, PvParams.from_config(config.pv))
    return PlanningInputs(
        grid=grid,
        scenario=scenario,
        catalog=catalog,
        econ=EconomicParams(config.economics.inflation_rate),
        pv_profile=profile,
        clamped_slots=clamp.clamped_slots,
        synthetic=synthetic,
    )


def solver_options(config: RunConfig) -> SolverOptions:
    s = config.solver
    return SolverOptions(
        feas_tol=s.feas_tol,
        int_tol=s.int_tol,
        rel_gap=s.rel_gap,
        node_limit=s.node_limit,
        time_limit=s.time_limit,
    )


def problem_from_config(config: RunConfig, battery_type: int, inputs: PlanningInputs | None = None) -> PlanningProblem:
    data = inputs or load_inputs(config)
    cap = config.planning.capacity_year_cap or default_capacity_cap(data.scenario, data.pv_profile)
    return PlanningProblem(
        grid=data.grid,
        scenario=data.scenario,
        pv_profile=data.pv_profile,
        catalog=data.catalog,
        econ=data.econ,
        battery_type=battery_type,
        capacity_year_cap=cap,
        allow_curtailment=config.planning.allow_curtailment,
        options=solver_options(config),
    )
