"""PV fleet output from irradiance and ambient temperature (NOCT cell-temperature model)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .models.config import PvConfig
from .timeseries import ScenarioData

logger = logging.getLogger(__name__)

NOCT_IRRADIANCE = 800.0  # W/m2
NOCT_AMBIENT = 20.0  # degC


@dataclass(frozen=True)
class PvParams:
    rating: float = 400.0  # kW
    efficiency: float = 0.95
    gamma: float = 0.004  # 1/degC
    noct: float = 45.0
    i_stc: float = 1000.0
    t_stc: float = 25.0

    def __post_init__(self) -> None:
        if self.rating < 0:
            raise ValueError(f"rating must be non-negative, got {self.rating}")
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.i_stc <= 0:
            raise ValueError(f"i_stc must be positive, got {self.i_stc}")

    @classmethod
    def from_config(cls, config: PvConfig) -> PvParams:
        return cls(
            rating=config.rating_kw,
            efficiency=config.efficiency,
            gamma=config.gamma,
            noct=config.noct,
            i_stc=config.i_stc,
            t_stc=config.t_stc,
        )


@dataclass(frozen=True)
class ClampReport:
    """Slots where the temperature derating drove raw output below zero."""

    clamped_slots: int
    min_raw_output: float


def cell_temperature(t_amb: ArrayLike, irradiance: ArrayLike, params: PvParams) -> np.ndarray:
    """T_cell = T_amb + (NOCT - 20) / 800 * I."""
    return np.asarray(t_amb, dtype=float) + (params.noct - NOCT_AMBIENT) / NOCT_IRRADIANCE * np.asarray(
        irradiance, dtype=float
    )


def _raw_power(t_amb: ArrayLike, irradiance: ArrayLike, params: PvParams) -> np.ndarray:
    irr = np.asarray(irradiance, dtype=float)
    derate = 1.0 - params.gamma * (cell_temperature(t_amb, irr, params) - params.t_stc)
    return params.efficiency * params.rating * (irr / params.i_stc) * derate


def pv_power(t_amb: ArrayLike, irradiance: ArrayLike, params: PvParams) -> np.ndarray:
    """Electrical output in kW, clamped at zero.

    Scalars in give a 0-d array out; use ``float()`` on it when needed.
    """
    return np.maximum(_raw_power(t_amb, irradiance, params), 0.0)


def build_pv_profile(scenario: ScenarioData, params: PvParams) -> tuple[np.ndarray, ClampReport]:
    """PV output per slot from irradiance and ambient temperature.

    Args:
        scenario: Source of irradiance and ambient temperature
        params: Array rating and temperature model

    Returns:
        Output in kW with negatives clamped to zero, and a count of clamped slots
    """
    raw = _raw_power(scenario.ambient_temp, scenario.irradiance, params)
    negative = raw < 0
    report = ClampReport(
        clamped_slots=int(negative.sum()),
        min_raw_output=float(raw.min()) if raw.size else 0.0,
    )
    if report.clamped_slots:
        logger.warning(
            "PV output clamped to 0 kW in %d slots (lowest raw value %.3f kW)",
            report.clamped_slots,
            report.min_raw_output,
        )
    profile = np.maximum(raw, 0.0)
    profile.setflags(write=False)
    return profile, report
