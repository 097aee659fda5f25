"""Shared fixtures: small planning instances over representative days."""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from gridvest.milp import SolverOptions
from gridvest.planner import PlanningProblem
from gridvest.timeseries import HOURS_PER_DAY, BatteryCatalog, EconomicParams, ScenarioData, TimeGrid

FIXTURES = Path(__file__).parent / "fixtures"


def _per_slot(grid: TimeGrid, value: float | list[float] | np.ndarray) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if array.ndim == 0:
        return np.full(grid.num_slots, float(array))
    if array.shape == (HOURS_PER_DAY,):
        return np.tile(array, grid.num_days)
    return array


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def one_year() -> TimeGrid:
    return TimeGrid(years=1)


@pytest.fixture
def make_scenario() -> Callable[..., ScenarioData]:
    """Scenario from scalars or 24-hour profiles repeated on every day."""

    def build(
        grid: TimeGrid,
        load: float | list[float] = 10.0,
        ev: float | list[float] = 0.0,
        price: float | list[float] = 0.2,
        irradiance: float | list[float] = 0.0,
        ambient: float | list[float] = 20.0,
    ) -> ScenarioData:
        return ScenarioData(
            grid=grid,
            irradiance=_per_slot(grid, irradiance),
            ambient_temp=_per_slot(grid, ambient),
            residential_load=_per_slot(grid, load),
            ev_demand=_per_slot(grid, ev),
            utility_price=_per_slot(grid, price),
        )

    return build


@pytest.fixture
def make_problem() -> Callable[..., PlanningProblem]:
    """Planning problem with a flat-priced catalog and explicit PV output."""

    def build(
        scenario: ScenarioData,
        battery_type: int = 4,
        cost: float = 500.0,
        pv: float | list[float] | np.ndarray = 0.0,
        efficiency: float = 0.95,
        capacity_year_cap: float = 1000.0,
        inflation_rate: float = 0.05,
        allow_curtailment: bool = False,
    ) -> PlanningProblem:
        grid = scenario.grid
        catalog = BatteryCatalog(
            costs=np.full((grid.years, 4), cost),
            charge_eff=efficiency,
            discharge_eff=efficiency,
        )
        return PlanningProblem(
            grid=grid,
            scenario=scenario,
            pv_profile=_per_slot(grid, pv),
            catalog=catalog,
            econ=EconomicParams(inflation_rate),
            battery_type=battery_type,
            capacity_year_cap=capacity_year_cap,
            allow_curtailment=allow_curtailment,
            options=SolverOptions(),
        )

    return build
