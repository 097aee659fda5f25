"""Terminal report formatting for inputs, plans, IGDT curves and checks."""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

if TYPE_CHECKING:
    from .checker import CheckReport
    from .igdt import IgdtCurve
    from .planner import PlanningInputs, PlanSolution, TypeResult

RULE = "=" * 70


def _stats_line(label: str, values: np.ndarray, unit: str) -> str:
    return (
        f"  {label:<14} min {values.min():>10.3f}  mean {values.mean():>10.3f}  "
        f"max {values.max():>10.3f} {unit}"
    )


def format_inputs_summary(inputs: PlanningInputs) -> str:
    grid = inputs.grid
    scenario = inputs.scenario
    catalog = inputs.catalog
    mode = "representative-day" if grid.representative_day else "full"
    lines = [
        f"\n{RULE}",
        " INPUT SUMMARY",
        RULE,
        f"\nGrid: {grid.years} years, {mode} mode, {grid.num_slots} slots",
        f"  Days per quarter: {list(grid.days_per_quarter)}  weights: {list(grid.day_weights)}",
        f"  Source: {'synthetic' if inputs.synthetic else 'scenario file'}",
        "\nSeries:",
        _stats_line("irradiance", scenario.irradiance, "W/m2"),
        _stats_line("ambient_temp", scenario.ambient_temp, "degC"),
        _stats_line("load", scenario.residential_load, "kW"),
        _stats_line("ev_demand", scenario.ev_demand, "kW"),
        _stats_line("price", scenario.utility_price, "$/kWh"),
        _stats_line("pv_output", inputs.pv_profile, "kW"),
    ]
    if inputs.clamped_slots:
        lines.append(f"  ⚠️  PV output clamped to 0 in {inputs.clamped_slots} slots")

    first, last = catalog.calendar_year(1), catalog.calendar_year(catalog.horizon)
    lines.append(f"\nCatalog: {first}-{last} ({catalog.horizon} years), efficiencies "
                 f"{catalog.charge_eff:.3f}/{catalog.discharge_eff:.3f}")
    for k, b in enumerate(catalog.types):
        column = catalog.costs[:, k]
        lines.append(f"  type {b}h: {column[0]:.0f} -> {column[-1]:.0f} $/kWh")
    return "\n".join(lines)


def _money(value: float) -> str:
    return "-" if value is None or (isinstance(value, float) and math.isnan(value)) else f"${value:,.0f}"


def format_plan(plan: PlanSolution) -> str:
    status = "✓" if plan.status.value == "optimal" else "⚠️"
    return (
        f"  {status} {plan.label:<9} total {_money(plan.objective):>16}  capex {_money(plan.capex):>14}  "
        f"opex {_money(plan.opex):>16}  capacity {plan.total_capacity:>10.1f} kWh  gap {plan.mip_gap:.1e}"
    )


def format_type_results(results: Sequence[TypeResult], baseline: PlanSolution) -> str:
    lines = [f"\n{RULE}", " PLANNING RESULTS", RULE, format_plan(baseline)]
    for result in results:
        if result.plan is None:
            lines.append(f"  ✗ type{result.battery_type:<5} failed: {result.error}")
            continue
        line = format_plan(result.plan)
        if result.winner:
            line += "  ← winner"
        lines.append(line)
    return "\n".join(lines)


def format_summary_table(frame: pd.DataFrame) -> str:
    shown = frame[["method", "total_cost", "profit", "breakeven_year", "winner"]].copy()
    shown["total_cost"] = shown["total_cost"].map(_money)
    shown["profit"] = shown["profit"].map(_money)
    shown["breakeven_year"] = shown["breakeven_year"].map(lambda v: "-" if pd.isna(v) else str(int(v)))
    shown["winner"] = shown["winner"].map(lambda w: "★" if w else "")
    return shown.to_string(index=False)


def format_curve(curve: IgdtCurve) -> str:
    lines = [
        f"\n{RULE}",
        f" UNCERTAINTY RADII (type {curve.battery_type}h, {curve.coupling})",
        RULE,
        f"Deterministic cost: {_money(curve.anchor)}",
        f"\n  {'beta':>6}  {'mode':<12} {'param':<6} {'alpha':>8}  {'cost':>16}  flags",
    ]
    for r in curve.results:
        lines.append(
            f"  {r.beta:>6.3f}  {r.mode:<12} {r.param:<6} {r.alpha:>8.4f}  {_money(r.achieved_cost):>16}  "
            f"{';'.join(r.flags)}"
        )
    return "\n".join(lines)


def format_check_report(report: CheckReport) -> str:
    status = "✓ PASSED" if report.passed else "✗ FAILED"
    lines = [f"\n{RULE}", f" CHECK: {report.target}", RULE, f"\nStatus: {status}"]
    lines.append(f"  Checks run: {', '.join(report.checks_run)}")
    if report.findings:
        lines.append(f"\nFindings ({len(report.findings)}):")
        lines.extend(f"  ✗ {finding}" for finding in report.findings)
    return "\n".join(lines)
