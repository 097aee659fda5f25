"""Custom exceptions for the battery investment planner."""

from __future__ import annotations


class GridvestError(Exception):
    """Base exception for planner errors."""

    exit_code = 1

    def __init__(self, message: str, details: str | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details


class InputError(GridvestError):
    """Raised when configuration or input data cannot be used."""

    exit_code = 2


class ConfigError(InputError):
    """Raised when the run configuration is missing or invalid."""


class ScenarioFileError(InputError):
    """Raised when a scenario or catalog file cannot be read or parsed."""

    def __init__(self, file_path: str, reason: str) -> None:
        self.file_path = file_path
        self.reason = reason
        super().__init__(f"Cannot read {file_path}", reason)


class MissingSlotError(InputError):
    """Raised when a time slot of the planning grid has no row in the input."""

    def __init__(self, year: int, quarter: int, day: int, hour: int) -> None:
        self.slot = (year, quarter, day, hour)
        message = f"Missing slot (y={year},q={quarter},d={day},t={hour})"
        details = "Every (year, quarter, day, hour) of the planning grid needs exactly one row."
        super().__init__(message, details)


class InvalidValueError(InputError):
    """Raised when a series holds a negative or malformed value."""

    def __init__(self, column: str, slot: tuple[int, int, int, int], value: object) -> None:
        self.column = column
        self.slot = slot
        self.value = value
        y, q, d, t = slot
        message = f"Invalid {column} value {value!r} at (y={y},q={q},d={d},t={t})"
        super().__init__(message, f"Column '{column}' must be a finite, non-negative number.")


class CatalogGapError(InputError):
    """Raised when the battery catalog lacks a (year, type) price."""

    def __init__(self, year_index: int, battery_type: int | None = None) -> None:
        self.year_index = year_index
        self.battery_type = battery_type
        message = f"catalog gap at year {year_index}"
        details = (
            f"No price for type {battery_type}h" if battery_type is not None else "Year row missing"
        )
        super().__init__(message, details)


class SolveError(GridvestError):
    """Raised when an optimization run does not produce a usable plan."""

    exit_code = 1

    def __init__(self, message: str, details: str | None = None, status: str | None = None) -> None:
        super().__init__(message, details)
        self.status = status


class PlanInfeasibleError(SolveError):
    """Raised when the planning model has no feasible dispatch."""

    def __init__(self, battery_type: int, surplus_slot: tuple[int, int, int, int] | None) -> None:
        self.battery_type = battery_type
        self.surplus_slot = surplus_slot
        message = f"Planning model for type {battery_type}h is infeasible"
        if surplus_slot is not None:
            y, q, d, t = surplus_slot
            details = (
                f"PV surplus at (y={y},q={q},d={d},t={t}) exceeds what the battery can absorb "
                "and export is forbidden. Enable curtailment or raise capacity_year_cap."
            )
        else:
            details = "No surplus slot found; check the input data and the capacity cap."
        super().__init__(message, details, status="infeasible")


class NumericalFailureError(SolveError):
    """Raised when the LP engine breaks down numerically after restarts."""

    def __init__(self, details: str) -> None:
        super().__init__("Numerical breakdown in the LP solver", details, status="numerical")
