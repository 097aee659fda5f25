"""Run configuration schema.

A run is described by one JSON document; every section has defaults so an
empty ``{}`` is a valid synthetic-data run.
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

BATTERY_TYPES: tuple[int, ...] = (1, 2, 4, 8)
DEFAULT_QUARTER_DAYS: tuple[int, int, int, int] = (90, 91, 92, 93)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PathsConfig(_Section):
    scenario: Path | None = None
    catalog: Path | None = None
    output_dir: Path = Path("gridvest_out")


class GridConfig(_Section):
    years: Annotated[int, Field(ge=1, le=50)] = 15
    representative_day: bool = True
    start_year: int = 2023
    quarter_days: tuple[int, int, int, int] = DEFAULT_QUARTER_DAYS

    @field_validator("quarter_days")
    @classmethod
    def _days_positive(cls, value: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
        if any(d <= 0 for d in value):
            raise ValueError("quarter day counts must be positive")
        return value


class PvConfig(_Section):
    rating_kw: Annotated[float, Field(ge=0)] = 400.0
    efficiency: Annotated[float, Field(gt=0, le=1)] = 0.95
    gamma: Annotated[float, Field(ge=0)] = 0.004
    noct: float = 45.0
    i_stc: Annotated[float, Field(gt=0)] = 1000.0
    t_stc: float = 25.0


class BatteryConfig(_Section):
    charge_eff: Annotated[float, Field(gt=0, le=1)] = 0.95
    discharge_eff: Annotated[float, Field(gt=0, le=1)] = 0.95


class EconomicsConfig(_Section):
    inflation_rate: Annotated[float, Field(gt=-1)] = 0.05


class PlanningConfig(_Section):
    types: list[int] = Field(default_factory=lambda: list(BATTERY_TYPES))
    allow_curtailment: bool = False
    capacity_year_cap: Annotated[float, Field(gt=0)] | None = None

    @field_validator("types")
    @classmethod
    def _known_types(cls, value: list[int]) -> list[int]:
        unknown = sorted(set(value) - set(BATTERY_TYPES))
        if unknown:
            raise ValueError(f"unknown battery types {unknown}; choose from {list(BATTERY_TYPES)}")
        return sorted(set(value))


class SolverConfig(_Section):
    feas_tol: Annotated[float, Field(gt=0)] = 1e-7
    int_tol: Annotated[float, Field(gt=0)] = 1e-6
    rel_gap: Annotated[float, Field(ge=0)] = 1e-6
    node_limit: Annotated[int, Field(ge=1)] = 100_000
    time_limit: Annotated[float, Field(gt=0)] = 600.0


class IgdtConfig(_Section):
    betas: list[float] = Field(default_factory=lambda: [0.02, 0.05, 0.1, 0.2])
    mode: Literal["robustness", "opportunity", "both"] = "both"
    coupling: Literal["independent", "joint"] = "independent"
    battery_type: int | None = None
    alpha_tol: Annotated[float, Field(gt=0, lt=0.5)] = 1e-3
    max_iter: Annotated[int, Field(ge=1)] = 30

    @field_validator("betas")
    @classmethod
    def _betas_valid(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("at least one beta is required")
        if any(b < 0 or b > 1 for b in value):
            raise ValueError("betas must lie in [0, 1]")
        if any(b2 <= b1 for b1, b2 in zip(value, value[1:], strict=False)):
            raise ValueError("betas must be strictly increasing")
        return value

    @field_validator("battery_type")
    @classmethod
    def _known_type(cls, value: int | None) -> int | None:
        if value is not None and value not in BATTERY_TYPES:
            raise ValueError(f"unknown battery type {value}; choose from {list(BATTERY_TYPES)}")
        return value


class UnitsConfig(_Section):
    price: Literal["per_kwh", "per_mwh"] = "per_kwh"


class SynthProfile(_Section):
    """Shape parameters of the synthetic scenario generator."""

    solar_peak: Annotated[float, Field(ge=0)] = 800.0
    solar_season: tuple[float, float, float, float] = (1.0, 0.8, 0.55, 0.85)
    sunrise: float = 6.5
    sunset: float = 18.5
    cloudiness: Annotated[float, Field(ge=0, le=1)] = 0.2
    temp_mean: tuple[float, float, float, float] = (21.0, 15.0, 10.0, 16.0)
    temp_swing: Annotated[float, Field(ge=0)] = 5.0
    temp_noise: Annotated[float, Field(ge=0)] = 0.5
    base_load: Annotated[float, Field(ge=0)] = 300.0
    morning_peak: Annotated[float, Field(ge=0)] = 0.6
    evening_peak: Annotated[float, Field(ge=0)] = 1.0
    load_noise: Annotated[float, Field(ge=0, lt=1)] = 0.05
    ev_peak: Annotated[float, Field(ge=0)] = 120.0
    ev_peak_hour: float = 19.0
    ev_spread: Annotated[float, Field(gt=0)] = 2.0
    ev_daytime_share: Annotated[float, Field(ge=0)] = 0.1
    offpeak_price: Annotated[float, Field(ge=0)] = 0.18
    peak_price: Annotated[float, Field(ge=0)] = 0.42
    peak_start: Annotated[int, Field(ge=1, le=24)] = 16
    peak_end: Annotated[int, Field(ge=1, le=25)] = 22
    load_growth: float = 0.02
    ev_growth: float = 0.12
    price_growth: float = 0.0

    @model_validator(mode="after")
    def _daylight_order(self) -> SynthProfile:
        if not 0 <= self.sunrise < self.sunset <= 24:
            raise ValueError("sunrise must precede sunset within the day")
        if self.peak_end < self.peak_start:
            raise ValueError("peak_end must not precede peak_start")
        return self


class RunConfig(_Section):
    paths: PathsConfig = PathsConfig()
    grid: GridConfig = GridConfig()
    pv: PvConfig = PvConfig()
    battery: BatteryConfig = BatteryConfig()
    economics: EconomicsConfig = EconomicsConfig()
    planning: PlanningConfig = PlanningConfig()
    solver: SolverConfig = SolverConfig()
    igdt: IgdtConfig = IgdtConfig()
    units: UnitsConfig = UnitsConfig()
    synth: SynthProfile = SynthProfile()
    seed: int = 1
