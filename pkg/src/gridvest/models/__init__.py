from .config import (
    BATTERY_TYPES,
    DEFAULT_QUARTER_DAYS,
    BatteryConfig,
    EconomicsConfig,
    GridConfig,
    IgdtConfig,
    PathsConfig,
    PlanningConfig,
    PvConfig,
    RunConfig,
    SolverConfig,
    SynthProfile,
    UnitsConfig,
)

__all__ = [
    "BATTERY_TYPES",
    "DEFAULT_QUARTER_DAYS",
    "BatteryConfig",
    "EconomicsConfig",
    "GridConfig",
    "IgdtConfig",
    "PathsConfig",
    "PlanningConfig",
    "PvConfig",
    "RunConfig",
    "SolverConfig",
    "SynthProfile",
    "UnitsConfig",
]
