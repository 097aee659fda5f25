"""Re-verification of written plan and IGDT artifacts."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import core
from .exceptions import ScenarioFileError
from .igdt import band_check, read_curve
from .planner import DISPATCH_COLUMNS, PlanningProblem, solve_plan
from .timeseries import HOURS_PER_DAY

# Dispatch CSVs carry six decimals.
FILE_RESOLUTION = 5e-7


@dataclass
class CheckReport:
    target: str
    checks_run: list[str] = field(default_factory=list)
    findings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.findings


def check_plan_files(dispatch_path: str | Path, plan_path: str | Path, tol: float | None = None) -> CheckReport:
    """Check a ``dispatch_*.csv`` / ``plan_*.json`` pair against every dispatch invariant.

    Args:
        dispatch_path: Written dispatch table
        plan_path: Matching plan summary
        tol: Feasibility tolerance; defaults to the one recorded in the summary

    Returns:
        Checks run and one finding per violated check

    Raises:
        ScenarioFileError: A file is unreadable, lacks columns or is incomplete
    """
    dispatch = core.read_report_csv(dispatch_path)
    missing = [c for c in DISPATCH_COLUMNS if c not in dispatch.columns]
    if missing:
        raise ScenarioFileError(str(dispatch_path), f"missing columns {missing}")
    plan = core.read_json(plan_path)
    try:
        b = int(plan["battery_type"])
        eta_ch = float(plan["charge_eff"])
        eta_dis = float(plan["discharge_eff"])
        big_m = float(plan["big_m"])
        int_tol = float(plan["int_tol"])
        feas = float(plan["feas_tol"]) if tol is None else tol
        years = plan["years"]
        cap = np.array([row["capacity"] for row in years], dtype=float)
        capcum = np.array([row["capacity_cumulative"] for row in years], dtype=float)
        capex = np.array([row["capex"] for row in years], dtype=float)
        opex = np.array([row["opex"] for row in years], dtype=float)
        gamma = np.array([row["gamma"] for row in years], dtype=float)
        cost = np.array([row["cost_per_kwh"] for row in years], dtype=float)
        objective = float(plan["objective"])
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioFileError(str(plan_path), f"plan summary is incomplete: {e}") from e

    report = CheckReport(target=f"{Path(dispatch_path).name} + {Path(plan_path).name}")
    y = dispatch["y"].to_numpy(dtype=np.int64)
    if y.min() < 1 or y.max() > len(years):
        raise ScenarioFileError(str(dispatch_path), "dispatch years fall outside the plan horizon")
    p_ch = dispatch["p_ch"].to_numpy(dtype=float)
    p_dis = dispatch["p_dis"].to_numpy(dtype=float)
    soc = dispatch["soc"].to_numpy(dtype=float)
    p_util = dispatch["p_utility"].to_numpy(dtype=float)
    cap_slot = capcum[y - 1]

    def slack(x: np.ndarray | float) -> np.ndarray:
        return feas * np.maximum(1.0, np.abs(x)) + FILE_RESOLUTION

    def record(label: str, mask: np.ndarray) -> None:
        report.checks_run.append(label)
        if mask.any():
            # a mixed-dtype row reads back as floats
            first = int(np.argmax(mask))
            yy, qq, dd, tt = (int(dispatch[c].iloc[first]) for c in ("y", "q", "d", "t"))
            report.findings.append(
                f"{label}: {int(mask.sum())} slot(s), first at (y={yy},q={qq},d={dd},t={tt})"
            )

    record("no-export", p_util < -slack(0.0))
    threshold = int_tol * big_m
    record("exclusivity", (p_ch > threshold) & (p_dis > threshold))
    record("soc-bounds", (soc < -slack(0.0)) | (soc > cap_slot + slack(cap_slot)))
    record("rate-limits", (p_ch > cap_slot / b + slack(cap_slot)) | (p_dis > cap_slot / b + slack(cap_slot)))

    report.checks_run.append("cyclic-balance")
    if len(dispatch) % HOURS_PER_DAY:
        report.findings.append("cyclic-balance: row count is not a whole number of days")
    else:
        ordered = dispatch.sort_values(["y", "q", "d", "t"])
        net = (eta_ch * ordered["p_ch"] - ordered["p_dis"] / eta_dis).to_numpy().reshape(-1, HOURS_PER_DAY)
        flow = (ordered["p_ch"] + ordered["p_dis"]).to_numpy().reshape(-1, HOURS_PER_DAY).max(axis=1)
        day_tol = HOURS_PER_DAY * (1.0 + 1.0 / eta_dis) * slack(flow)
        bad = np.abs(net.sum(axis=1)) > day_tol
        if bad.any():
            report.findings.append(f"cyclic-balance: broken on {int(bad.sum())} day(s)")

    report.checks_run.append("objective-audit")
    if np.any(np.abs(np.cumsum(cap) - capcum) > slack(capcum)):
        report.findings.append("objective-audit: cumulative capacity is not the running sum")
    expected_capex = gamma * cap * cost
    if np.any(np.abs(expected_capex - capex) > 1e-6 * np.maximum(1.0, np.abs(expected_capex))):
        report.findings.append("objective-audit: yearly capex differs from gamma * capacity * price")
    total = capex.sum() + opex.sum()
    if abs(total - objective) > 1e-6 * max(1.0, abs(total)):
        report.findings.append(f"objective-audit: capex + opex = {total:.6f} but objective is {objective:.6f}")
    return report


def check_curve_file(
    curve_path: str | Path, problem: PlanningProblem, alpha_tol: float = 1e-3
) -> CheckReport:
    """Re-solve the band around every radius in an IGDT curve file."""
    curve = read_curve(curve_path)
    report = CheckReport(target=Path(curve_path).name)
    if problem.battery_type != curve.battery_type:
        problem = problem.with_type(curve.battery_type)

    report.checks_run.append("anchor")
    anchor = solve_plan(problem).objective
    if abs(anchor - curve.anchor) > problem.options.rel_gap * max(1.0, abs(anchor)) * 10:
        report.findings.append(f"anchor: file says {curve.anchor:.6f}, re-solve gives {anchor:.6f}")

    report.checks_run.append("monotone")
    for mode in ("robustness", "opportunity"):
        for param in ("pv", "ev", "joint"):
            alphas = [r.alpha for r in curve.select(mode, param) if not r.failed]  # type: ignore[arg-type]
            if any(a2 < a1 for a1, a2 in zip(alphas, alphas[1:], strict=False)):
                report.findings.append(f"monotone: {mode} {param} radius decreases with beta")

    report.checks_run.append("band")
    for result in curve.results:
        if result.failed:
            report.findings.append(f"band: beta={result.beta:g} {result.mode} {result.param} is flagged failed")
            continue
        outcome = band_check(problem, result, curve.anchor, alpha_tol)
        if not outcome.passed:
            report.findings.append(f"band: beta={result.beta:g} {result.mode} {result.param}: {outcome.message}")
    return report
