"""Planning time grid, scenario and catalog ingestion, synthetic scenarios.

Slots are ordered year-major, then quarter, day and hour. All four
coordinates are 1-based, so the first slot of a grid is ``(1, 1, 1, 1)`` and
hour ``t`` covers the interval ``[t-1, t)``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from functools import cached_property
from importlib.resources import files
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import CatalogGapError, InvalidValueError, MissingSlotError, ScenarioFileError
from .models.config import BATTERY_TYPES, DEFAULT_QUARTER_DAYS, SynthProfile

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24
QUARTERS_PER_YEAR = 4
DEFAULT_START_YEAR = 2023

COORD_COLUMNS = ("year", "quarter", "day", "hour")
# CSV column -> ScenarioData attribute
SERIES_COLUMNS = {
    "irradiance": "irradiance",
    "ambient_temp": "ambient_temp",
    "load": "residential_load",
    "ev_demand": "ev_demand",
    "price": "utility_price",
}
NON_NEGATIVE_COLUMNS = ("irradiance", "load", "ev_demand", "price")
SCENARIO_COLUMNS = (*COORD_COLUMNS, *SERIES_COLUMNS)
CATALOG_COLUMNS = ("year", *(f"type_{b}h" for b in BATTERY_TYPES))
PRICE_DIVISORS = {"per_kwh": 1.0, "per_mwh": 1000.0}
_HOUR_MIDPOINTS = np.arange(HOURS_PER_DAY) + 0.5


@dataclass(frozen=True)
class TimeGrid:
    """Index space of a plan: years x quarters x days x hours."""

    years: int = 15
    quarter_days: tuple[int, ...] = DEFAULT_QUARTER_DAYS
    representative_day: bool = True

    def __post_init__(self) -> None:
        if self.years < 1:
            raise ValueError("a grid needs at least one year")
        if len(self.quarter_days) != QUARTERS_PER_YEAR or any(d <= 0 for d in self.quarter_days):
            raise ValueError(f"quarter_days must be {QUARTERS_PER_YEAR} positive counts")

    @property
    def days_per_quarter(self) -> tuple[int, ...]:
        if self.representative_day:
            return (1,) * QUARTERS_PER_YEAR
        return tuple(self.quarter_days)

    @property
    def day_weights(self) -> tuple[float, ...]:
        if self.representative_day:
            return tuple(float(d) for d in self.quarter_days)
        return (1.0,) * QUARTERS_PER_YEAR

    @property
    def slots_per_year(self) -> int:
        return sum(self.days_per_quarter) * HOURS_PER_DAY

    @property
    def num_slots(self) -> int:
        return self.slots_per_year * self.years

    @property
    def num_days(self) -> int:
        return self.num_slots // HOURS_PER_DAY

    def as_representative(self) -> TimeGrid:
        return replace(self, representative_day=True)

    @cached_property
    def _quarter_offsets(self) -> np.ndarray:
        per_quarter = np.asarray(self.days_per_quarter, dtype=np.int64) * HOURS_PER_DAY
        return np.concatenate(([0], np.cumsum(per_quarter)[:-1]))

    @cached_property
    def coordinates(self) -> np.ndarray:
        """``(num_slots, 4)`` int array of (year, quarter, day, hour) in slot order."""
        blocks = []
        for q, days in enumerate(self.days_per_quarter, start=1):
            d, t = np.meshgrid(np.arange(1, days + 1), np.arange(1, HOURS_PER_DAY + 1), indexing="ij")
            blocks.append(np.column_stack((np.full(d.size, q), d.ravel(), t.ravel())))
        one_year = np.vstack(blocks)
        years = np.repeat(np.arange(1, self.years + 1), one_year.shape[0])
        coords = np.column_stack((years, np.tile(one_year, (self.years, 1)))).astype(np.int64)
        coords.setflags(write=False)
        return coords

    @cached_property
    def slot_weights(self) -> np.ndarray:
        weights = np.asarray(self.day_weights)[self.coordinates[:, 1] - 1]
        weights.setflags(write=False)
        return weights

    @property
    def slot_years(self) -> np.ndarray:
        return self.coordinates[:, 0]

    def positions(
        self, year: np.ndarray, quarter: np.ndarray, day: np.ndarray, hour: np.ndarray
    ) -> np.ndarray:
        """Flat slot positions for coordinate arrays assumed to lie inside the grid."""
        return (
            (year - 1) * self.slots_per_year
            + self._quarter_offsets[quarter - 1]
            + (day - 1) * HOURS_PER_DAY
            + (hour - 1)
        )

    def position(self, year: int, quarter: int, day: int, hour: int) -> int:
        return int(self.positions(np.array(year), np.array(quarter), np.array(day), np.array(hour)))

    def inside(
        self, year: np.ndarray, quarter: np.ndarray, day: np.ndarray, hour: np.ndarray
    ) -> np.ndarray:
        q_ok = (quarter >= 1) & (quarter <= QUARTERS_PER_YEAR)
        max_day = np.asarray(self.days_per_quarter)[np.clip(quarter, 1, QUARTERS_PER_YEAR) - 1]
        return (
            (year >= 1)
            & (year <= self.years)
            & q_ok
            & (day >= 1)
            & (day <= max_day)
            & (hour >= 1)
            & (hour <= HOURS_PER_DAY)
        )

    def slot(self, position: int) -> tuple[int, int, int, int]:
        y, q, d, t = (int(v) for v in self.coordinates[position])
        return y, q, d, t


def _frozen(values: np.ndarray | Sequence[float]) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ScenarioData:
    """Aligned exogenous series: W/m2, degC, kW, kW and $/kWh per slot."""

    grid: TimeGrid
    irradiance: np.ndarray
    ambient_temp: np.ndarray
    residential_load: np.ndarray
    ev_demand: np.ndarray
    utility_price: np.ndarray

    def __post_init__(self) -> None:
        for column, attribute in SERIES_COLUMNS.items():
            values = _frozen(getattr(self, attribute))
            if values.shape != (self.grid.num_slots,):
                raise ValueError(
                    f"{attribute} has shape {values.shape}, grid needs ({self.grid.num_slots},)"
                )
            bad = ~np.isfinite(values)
            if column in NON_NEGATIVE_COLUMNS:
                bad |= values < 0
            if bad.any():
                pos = int(np.argmax(bad))
                raise InvalidValueError(column, self.grid.slot(pos), float(values[pos]))
            object.__setattr__(self, attribute, values)

    def series(self, column: str) -> np.ndarray:
        return getattr(self, SERIES_COLUMNS[column])

    def with_series(self, **changes: np.ndarray) -> ScenarioData:
        return replace(self, **changes)

    def to_frame(self) -> pd.DataFrame:
        coords = self.grid.coordinates
        data: dict[str, np.ndarray] = {name: coords[:, i] for i, name in enumerate(COORD_COLUMNS)}
        for column, attribute in SERIES_COLUMNS.items():
            data[column] = getattr(self, attribute)
        return pd.DataFrame(data)


@dataclass(frozen=True, eq=False)
class BatteryCatalog:
    """Investment cost ($/kWh) per horizon year and duration type, plus efficiencies."""

    costs: np.ndarray  # (years, len(types))
    types: tuple[int, ...] = BATTERY_TYPES
    start_year: int = DEFAULT_START_YEAR
    charge_eff: float = 0.95
    discharge_eff: float = 0.95

    def __post_init__(self) -> None:
        costs = np.array(self.costs, dtype=float)
        if costs.ndim != 2 or costs.shape[1] != len(self.types):
            raise ValueError(f"cost table must have one column per type {self.types}")
        bad = ~np.isfinite(costs) | (costs <= 0)
        if bad.any():
            y, k = (int(i) for i in np.argwhere(bad)[0])
            raise CatalogGapError(y + 1, self.types[k])
        for label, eff in (("charge_eff", self.charge_eff), ("discharge_eff", self.discharge_eff)):
            if not 0 < eff <= 1:
                raise ValueError(f"{label} must lie in (0, 1], got {eff}")
        costs.setflags(write=False)
        object.__setattr__(self, "costs", costs)

    @property
    def horizon(self) -> int:
        return int(self.costs.shape[0])

    def _column(self, battery_type: int) -> int:
        try:
            return self.types.index(battery_type)
        except ValueError:
            raise KeyError(f"battery type {battery_type}h not in catalog {self.types}") from None

    def cost(self, year_index: int, battery_type: int) -> float:
        if not 1 <= year_index <= self.horizon:
            raise CatalogGapError(year_index, battery_type)
        return float(self.costs[year_index - 1, self._column(battery_type)])

    def costs_for(self, battery_type: int, years: int | None = None) -> np.ndarray:
        span = self.horizon if years is None else years
        if span > self.horizon:
            raise CatalogGapError(self.horizon + 1, battery_type)
        return self.costs[:span, self._column(battery_type)].copy()

    def calendar_year(self, year_index: int) -> int:
        return self.start_year + year_index - 1

    def scaled(self, factor: float) -> BatteryCatalog:
        return replace(self, costs=self.costs * factor)


@dataclass(frozen=True)
class EconomicParams:
    inflation_rate: float = 0.05

    def __post_init__(self) -> None:
        if not self.inflation_rate > -1:
            raise ValueError(f"inflation_rate must exceed -1, got {self.inflation_rate}")

    def discount_factors(self, years: int) -> np.ndarray:
        return discount_factors(self, years)


def discount_factors(econ: EconomicParams, years: int) -> np.ndarray:
    """gamma_y = 1 / (1 + r)^y for y = 1..years."""
    return 1.0 / (1.0 + econ.inflation_rate) ** np.arange(1, years + 1, dtype=float)


def _read_table(path: Path, expected: Sequence[str]) -> pd.DataFrame:
    if not path.exists():
        raise ScenarioFileError(str(path), "file does not exist or is not accessible")
    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ScenarioFileError(str(path), f"malformed CSV: {e}") from e
    columns = [c.strip() for c in frame.columns]
    if tuple(columns) != tuple(expected):
        raise ScenarioFileError(
            str(path), f"header must be '{','.join(expected)}', got '{','.join(columns)}'"
        )
    frame.columns = columns
    return frame


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def _numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    # float() rounds correctly; the pandas fast parser can be one ulp off
    return frame[column].str.strip().map(_parse_float).to_numpy(dtype=float)


def load_scenario(
    paths: str | Path | Sequence[str | Path],
    grid: TimeGrid,
    price_unit: str = "per_kwh",
) -> ScenarioData:
    """Read one or more scenario CSV files and align them to ``grid``.

    Rows may come in any order and be split across files, but every slot of
    the grid must appear exactly once.

    Args:
        paths: One CSV path or several whose rows together cover the grid
        grid: Planning grid the rows are aligned to
        price_unit: ``per_kwh`` or ``per_mwh``; prices are stored per kWh

    Returns:
        Series in grid slot order

    Raises:
        ScenarioFileError: Unreadable file, bad header, malformed or duplicate rows
        MissingSlotError: A grid slot has no row
        InvalidValueError: A series value is missing, non-numeric or negative
    """
    if price_unit not in PRICE_DIVISORS:
        raise ValueError(f"unknown price unit {price_unit!r}; choose from {sorted(PRICE_DIVISORS)}")
    sources = [paths] if isinstance(paths, str | Path) else list(paths)
    if not sources:
        raise ScenarioFileError("<none>", "no scenario files given")

    frames = []
    for source in sources:
        path = Path(source)
        frame = _read_table(path, SCENARIO_COLUMNS)
        coords = {}
        for column in COORD_COLUMNS:
            values = _numeric(frame, column)
            bad = ~np.isfinite(values) | (values != np.round(values))
            if bad.any():
                row = int(np.argmax(bad))
                raise ScenarioFileError(
                    str(path), f"row {row + 2}: {column} {frame[column].iloc[row]!r} is not an integer"
                )
            coords[column] = values.astype(np.int64)
        inside = grid.inside(coords["year"], coords["quarter"], coords["day"], coords["hour"])
        if not inside.all():
            row = int(np.argmin(inside))
            slot = tuple(int(coords[c][row]) for c in COORD_COLUMNS)
            raise ScenarioFileError(
                str(path), f"row {row + 2}: slot {slot} lies outside the planning grid"
            )
        parsed = pd.DataFrame(coords)
        for column in SERIES_COLUMNS:
            parsed[column] = _numeric(frame, column)
        parsed["_source"] = str(path)
        parsed["_row"] = np.arange(2, len(frame) + 2)
        frames.append(parsed)

    table = pd.concat(frames, ignore_index=True)
    pos = grid.positions(
        table["year"].to_numpy(), table["quarter"].to_numpy(), table["day"].to_numpy(), table["hour"].to_numpy()
    )
    duplicated = pd.Series(pos).duplicated()
    if duplicated.any():
        row = table.iloc[int(np.argmax(duplicated.to_numpy()))]
        raise ScenarioFileError(
            row["_source"], f"row {row['_row']}: duplicate slot {grid.slot(int(pos[duplicated.to_numpy()][0]))}"
        )

    present = np.zeros(grid.num_slots, dtype=bool)
    present[pos] = True
    if not present.all():
        raise MissingSlotError(*grid.slot(int(np.argmin(present))))

    aligned: dict[str, np.ndarray] = {}
    for column, attribute in SERIES_COLUMNS.items():
        values = np.empty(grid.num_slots)
        values[pos] = table[column].to_numpy()
        aligned[attribute] = values
    aligned["utility_price"] = aligned["utility_price"] / PRICE_DIVISORS[price_unit]

    scenario = ScenarioData(grid=grid, **aligned)
    logger.info("Loaded %d slots from %d file(s)", grid.num_slots, len(sources))
    return scenario


def write_scenario(scenario: ScenarioData, path: str | Path) -> Path:
    """Write ``scenario`` in the ingestion schema with round-trip float precision."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    scenario.to_frame().to_csv(target, index=False, lineterminator="\n", encoding="utf-8")
    return target


def default_catalog_path() -> Path:
    return Path(str(files("gridvest").joinpath("data/table1_catalog.csv")))


def load_catalog(
    path: str | Path | None,
    horizon: int,
    start_year: int = DEFAULT_START_YEAR,
    charge_eff: float = 0.95,
    discharge_eff: float = 0.95,
) -> BatteryCatalog:
    """Read a per-year price table covering horizon years ``start_year .. start_year+horizon-1``.

    ``path=None`` reads the packaged price table.

    Args:
        path: Catalog CSV, or None for the packaged table
        horizon: Number of planning years to cover
        start_year: Calendar year of horizon year 1
        charge_eff: Charging efficiency shared by all types
        discharge_eff: Discharging efficiency shared by all types

    Returns:
        Costs indexed by horizon year and duration type

    Raises:
        ScenarioFileError: Unreadable file, bad header or repeated year
        CatalogGapError: A horizon year or one of its prices is missing
    """
    source = Path(path) if path is not None else default_catalog_path()
    frame = _read_table(source, CATALOG_COLUMNS)
    years = _numeric(frame, "year")
    if (~np.isfinite(years)).any():
        raise ScenarioFileError(str(source), "year column must be numeric")
    by_year: dict[int, int] = {}
    for row, year in enumerate(years.astype(np.int64)):
        if int(year) in by_year:
            raise ScenarioFileError(str(source), f"year {year} listed twice")
        by_year[int(year)] = row

    prices = np.column_stack([_numeric(frame, c) for c in CATALOG_COLUMNS[1:]])
    costs = np.empty((horizon, len(BATTERY_TYPES)))
    for y in range(1, horizon + 1):
        row = by_year.get(start_year + y - 1)
        if row is None:
            raise CatalogGapError(y)
        for k, b in enumerate(BATTERY_TYPES):
            value = prices[row, k]
            if not np.isfinite(value):
                raise CatalogGapError(y, b)
            if value <= 0:
                raise ScenarioFileError(str(source), f"non-positive price {value} for {start_year + y - 1}/{b}h")
            costs[y - 1, k] = value

    return BatteryCatalog(
        costs=costs,
        types=BATTERY_TYPES,
        start_year=start_year,
        charge_eff=charge_eff,
        discharge_eff=discharge_eff,
    )


def solar_bell(profile: SynthProfile) -> np.ndarray:
    """Clear-sky irradiance shape over the 24 hour midpoints, peaking at 1.0."""
    h = _HOUR_MIDPOINTS
    span = profile.sunset - profile.sunrise
    phase = (h - profile.sunrise) / span
    return np.where((phase > 0) & (phase < 1), np.sin(np.pi * np.clip(phase, 0, 1)), 0.0)


def _gauss(hours: np.ndarray, center: float, spread: float) -> np.ndarray:
    return np.exp(-0.5 * ((hours - center) / spread) ** 2)


def synth_scenario(seed: int, grid: TimeGrid, profile: SynthProfile | None = None) -> ScenarioData:
    """Deterministic synthetic scenario for ``grid``.

    Irradiance is ``solar_peak * season[q] * bell(t) * (1 - cloudiness * u)``
    with one uniform draw ``u`` per day. Load has morning and evening peaks,
    EV demand an evening peak, and price a two-tier peak window. Load, EV and
    price grow geometrically per year.

    Args:
        seed: Seed for the only random draws (daily cloudiness)
        grid: Planning grid to fill
        profile: Shape constants; defaults to ``SynthProfile()``

    Returns:
        A scenario covering every slot of ``grid``
    """
    shape = profile or SynthProfile()
    rng = np.random.default_rng(seed)
    hours = _HOUR_MIDPOINTS
    coords = grid.coordinates
    year = coords[:, 0]
    quarter_idx = coords[:, 1] - 1
    hour_idx = coords[:, 3] - 1
    n_days = grid.num_days

    cloud = 1.0 - shape.cloudiness * rng.uniform(0.0, 1.0, n_days)
    temp_noise = rng.normal(0.0, shape.temp_noise, grid.num_slots)
    load_noise = rng.uniform(-shape.load_noise, shape.load_noise, grid.num_slots)
    day_of_slot = np.arange(grid.num_slots) // HOURS_PER_DAY

    season = np.asarray(shape.solar_season)[quarter_idx]
    irradiance = shape.solar_peak * season * solar_bell(shape)[hour_idx] * cloud[day_of_slot]

    diurnal = np.cos(2.0 * np.pi * (hours - 15.0) / HOURS_PER_DAY)
    ambient = np.asarray(shape.temp_mean)[quarter_idx] + shape.temp_swing * diurnal[hour_idx] + temp_noise

    growth = year - 1
    load_shape = 1.0 + shape.morning_peak * _gauss(hours, 8.0, 1.5) + shape.evening_peak * _gauss(hours, 19.0, 2.0)
    load = shape.base_load * load_shape[hour_idx] * (1.0 + load_noise) * (1.0 + shape.load_growth) ** growth

    ev_shape = _gauss(hours, shape.ev_peak_hour, shape.ev_spread) + shape.ev_daytime_share * _gauss(hours, 12.0, 3.0)
    ev = shape.ev_peak * ev_shape[hour_idx] * (1.0 + shape.ev_growth) ** growth

    hour_of_slot = coords[:, 3]
    peak = (hour_of_slot > shape.peak_start) & (hour_of_slot <= shape.peak_end)
    price = np.where(peak, shape.peak_price, shape.offpeak_price) * (1.0 + shape.price_growth) ** growth

    return ScenarioData(
        grid=grid,
        irradiance=irradiance,
        ambient_temp=ambient,
        residential_load=np.maximum(load, 0.0),
        ev_demand=ev,
        utility_price=price,
    )


def aggregate_representative_days(scenario: ScenarioData) -> ScenarioData:
    """Average each quarter's days hour by hour into one day weighted by its day count."""
    full = scenario.grid
    if full.representative_day:
        return scenario
    rep = full.as_representative()
    coords = full.coordinates
    target = rep.positions(coords[:, 0], coords[:, 1], np.ones(len(coords), dtype=np.int64), coords[:, 3])
    counts = np.bincount(target, minlength=rep.num_slots).astype(float)

    averaged = {
        attribute: np.bincount(target, weights=getattr(scenario, attribute), minlength=rep.num_slots) / counts
        for attribute in SERIES_COLUMNS.values()
    }
    return ScenarioData(grid=rep, **averaged)
