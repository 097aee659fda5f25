"""Post-optimization cash flow: yearly profit, break-even year and table-shaped reports."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from .planner import PlanSolution, TypeResult

THOUSAND = 1000.0


def profit_series(no_batt: ArrayLike, with_batt: ArrayLike, literal: bool = False) -> np.ndarray:
    """Cumulative profit per year: ``sum_{k<=y} (no_batt_k - with_batt_k)``.

    ``literal=True`` keeps only year ``y`` on the with-battery side:
    ``sum_{k<=y} no_batt_k - with_batt_y``.
    """
    base = np.asarray(no_batt, dtype=float)
    other = np.asarray(with_batt, dtype=float)
    if base.shape != other.shape:
        raise ValueError(f"series lengths differ: {base.shape[0]} vs {other.shape[0]}")
    if literal:
        return np.cumsum(base) - other
    return np.cumsum(base - other)


def breakeven(profit: ArrayLike, capex: ArrayLike | float) -> int | None:
    """First 1-based year whose cumulative profit covers the cumulative investment.

    ``capex`` is either one total or the cumulative investment through each year.
    """
    cumulative_profit = np.asarray(profit, dtype=float)
    line = np.broadcast_to(np.asarray(capex, dtype=float), cumulative_profit.shape)
    covered = (cumulative_profit >= line) & (cumulative_profit > 0)
    if not covered.any():
        return None
    return int(np.argmax(covered)) + 1


@dataclass
class CashflowReport:
    battery_type: int
    opex_no_battery: np.ndarray
    opex_with_battery: np.ndarray
    capex: np.ndarray
    cumulative_profit: np.ndarray
    breakeven_year: int | None
    total_cost: float
    total_profit: float
    total_profit_nominal: float

    @property
    def years(self) -> int:
        return int(self.capex.shape[0])


def build_cashflow(plan: PlanSolution, baseline: PlanSolution, literal_profit: bool = False) -> CashflowReport:
    """Yearly costs, cumulative profit and break-even year of ``plan`` against ``baseline``.

    Args:
        plan: Battery plan
        baseline: No-battery plan over the same horizon
        literal_profit: Set the with-battery side to the current year only (see ``profit_series``)

    Returns:
        Discounted per-year series; ``breakeven_year`` is None if never reached
    """
    profit = profit_series(baseline.opex_by_year, plan.opex_by_year, literal=literal_profit)
    nominal = baseline.opex_nominal_by_year.sum() - plan.opex_nominal_by_year.sum() - plan.capex_nominal_by_year.sum()
    return CashflowReport(
        battery_type=plan.battery_type,
        opex_no_battery=baseline.opex_by_year.copy(),
        opex_with_battery=plan.opex_by_year.copy(),
        capex=plan.capex_by_year.copy(),
        cumulative_profit=profit,
        breakeven_year=breakeven(profit, np.cumsum(plan.capex_by_year)),
        total_cost=plan.objective,
        total_profit=baseline.opex - plan.objective,
        total_profit_nominal=float(nominal),
    )


def cashflow_bars(report: CashflowReport) -> pd.DataFrame:
    """Bar-chart data: cumulative profit bars against the cumulative investment line."""
    return pd.DataFrame(
        {
            "year": np.arange(1, report.years + 1),
            "opex": report.cumulative_profit,
            "capex_line": np.cumsum(report.capex),
        }
    )


def summary_report(
    results: Sequence[TypeResult],
    baseline: PlanSolution,
    literal_profit: bool = False,
) -> pd.DataFrame:
    """Total cost and profit per battery type against the no-battery baseline.

    The baseline row leaves profit empty; failed types keep their row with
    the failure in ``status``.

    Returns:
        One row for the baseline, then one per type in type order, with the
        ``winner`` column marking the cheapest successful plan
    """
    rows = [
        {
            "method": "No battery",
            "battery_type": None,
            "total_cost": baseline.objective,
            "capex": 0.0,
            "opex": baseline.opex,
            "profit": np.nan,
            "profit_nominal": np.nan,
            "breakeven_year": None,
            "winner": False,
            "status": baseline.status.value,
        }
    ]
    for result in sorted(results, key=lambda r: r.battery_type):
        if result.plan is None:
            rows.append(
                {
                    "method": f"Battery type {result.battery_type}",
                    "battery_type": result.battery_type,
                    "total_cost": np.nan,
                    "capex": np.nan,
                    "opex": np.nan,
                    "profit": np.nan,
                    "profit_nominal": np.nan,
                    "breakeven_year": None,
                    "winner": False,
                    "status": f"failed: {result.error}",
                }
            )
            continue
        report = build_cashflow(result.plan, baseline, literal_profit)
        rows.append(
            {
                "method": f"Battery type {result.battery_type}",
                "battery_type": result.battery_type,
                "total_cost": result.plan.objective,
                "capex": result.plan.capex,
                "opex": result.plan.opex,
                "profit": report.total_profit,
                "profit_nominal": report.total_profit_nominal,
                "breakeven_year": report.breakeven_year,
                "winner": result.winner,
                "status": result.plan.status.value,
            }
        )
    frame = pd.DataFrame(rows)
    frame["battery_type"] = frame["battery_type"].astype("Int64")
    frame["breakeven_year"] = frame["breakeven_year"].astype("Int64")
    return frame


def _year_columns(years: int) -> list[str]:
    return [f"Y{y}" for y in range(1, years + 1)]


def _per_type_table(rows: dict[int, np.ndarray], years: int) -> pd.DataFrame:
    frame = pd.DataFrame.from_dict(rows, orient="index", columns=_year_columns(years))
    frame.index.name = "battery_type"
    return frame.reset_index()


def capacity_table(plans: Sequence[PlanSolution]) -> pd.DataFrame:
    """Installed kWh per year, one row per type."""
    if not plans:
        return pd.DataFrame(columns=["battery_type"])
    years = len(plans[0].cap_per_year)
    return _per_type_table({p.battery_type: p.cap_per_year for p in plans}, years)


def yearly_cash_table(
    plans: Sequence[PlanSolution],
    kind: str,
    baseline: PlanSolution | None = None,
    discounted: bool = True,
) -> pd.DataFrame:
    """Per-year money in $1000, one row per type.

    ``kind`` is ``capex``, ``opex`` (with battery) or ``opex_no_battery``; the
    last repeats the baseline under every type.
    """
    if not plans:
        return pd.DataFrame(columns=["battery_type"])
    years = len(plans[0].cap_per_year)
    if kind == "capex":
        pick = (lambda p: p.capex_by_year) if discounted else (lambda p: p.capex_nominal_by_year)
        rows = {p.battery_type: pick(p) / THOUSAND for p in plans}
    elif kind == "opex":
        pick = (lambda p: p.opex_by_year) if discounted else (lambda p: p.opex_nominal_by_year)
        rows = {p.battery_type: pick(p) / THOUSAND for p in plans}
    elif kind == "opex_no_battery":
        if baseline is None:
            raise ValueError("opex_no_battery needs the baseline plan")
        base = baseline.opex_by_year if discounted else baseline.opex_nominal_by_year
        rows = {p.battery_type: base / THOUSAND for p in plans}
    else:
        raise ValueError(f"unknown table kind {kind!r}")
    return _per_type_table(rows, years)
