"""Core file I/O: run configuration, JSON and CSV report artifacts."""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import orjson
import pandas as pd
from pydantic import ValidationError

from . import __version__
from .exceptions import ConfigError, ScenarioFileError
from .models import RunConfig

UTC = timezone.utc  # datetime.UTC alias (Python 3.11+)

DEFAULT_OUTPUT_DIR = Path("gridvest_out")
HEADER_PREFIX = "# gridvest"
CSV_FLOAT_FORMAT = "%.6f"


def read_json(file_path: str | Path) -> dict[str, Any]:
    """Read and parse a JSON document.

    Raises:
        ScenarioFileError: If the file doesn't exist or holds invalid JSON
    """
    path = Path(file_path)

    if not path.exists():
        raise ScenarioFileError(str(path), "file does not exist or is not accessible")

    try:
        data = orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as e:
        raise ScenarioFileError(str(path), f"JSON parsing error: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioFileError(str(path), "top-level JSON value must be an object")
    return data


def format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        loc = " -> ".join(str(part) for part in item["loc"])
        lines.append(f"[{loc}]: {item['msg']}")
    return "\n".join(lines)


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    check_paths: bool = True,
) -> RunConfig:
    """Build a :class:`RunConfig` from defaults, an optional file and flag overrides.

    Precedence is defaults < file < overrides. With ``check_paths`` the scenario
    and catalog files named by the result must exist.

    Args:
        config_path: JSON configuration file, or None for defaults only
        overrides: Nested values applied last, e.g. from command-line flags
        check_paths: Require the referenced input files to exist

    Returns:
        The validated run configuration

    Raises:
        ConfigError: Validation failed or a referenced file is missing
        ScenarioFileError: The configuration file cannot be read
    """
    raw: dict[str, Any] = read_json(config_path) if config_path is not None else {}
    if overrides:
        raw = _merge(raw, overrides)

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError("Configuration is invalid.", format_validation_error(e)) from e

    if check_paths:
        for label, path in (("paths.scenario", config.paths.scenario), ("paths.catalog", config.paths.catalog)):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} does not exist: {path}", "Fix the path or omit the key.")
    return config


def ensure_output_directory(directory: Path | None = None) -> Path:
    """Create output directory if it doesn't exist."""
    path = Path(directory) if directory is not None else DEFAULT_OUTPUT_DIR
    path.mkdir(parents=True, exist_ok=True)
    return path


def _timestamp() -> str:
    return datetime.now(UTC).strftime("%Y-%m-%dT%H:%M:%SZ")


def header_line(seed: int, generated: str | None = None) -> str:
    return f"{HEADER_PREFIX} {__version__} seed={seed} generated={generated or _timestamp()}"


def write_json(
    data: dict[str, Any],
    filename: str,
    output_dir: Path | None = None,
    seed: int = 0,
) -> Path:
    """Write a JSON report with a ``meta`` block; keys are sorted for stable output."""
    directory = ensure_output_directory(output_dir)
    file_path = directory / Path(filename).name
    payload = {
        **data,
        "meta": {"tool": "gridvest", "version": __version__, "seed": seed, "generated": _timestamp()},
    }
    file_path.write_bytes(
        orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)
    )
    return file_path


def write_csv(
    frame: pd.DataFrame,
    filename: str,
    output_dir: Path | None = None,
    seed: int = 0,
    float_format: str | None = CSV_FLOAT_FORMAT,
) -> Path:
    """Write a CSV report preceded by the ``# gridvest`` header line."""
    directory = ensure_output_directory(output_dir)
    file_path = directory / Path(filename).name
    body = frame.to_csv(index=False, float_format=float_format, lineterminator="\n")
    file_path.write_text(header_line(seed) + "\n" + body, encoding="utf-8")
    return file_path


def read_report_csv(file_path: str | Path) -> pd.DataFrame:
    """Read a CSV written by :func:`write_csv`, skipping the header line."""
    path = Path(file_path)
    if not path.exists():
        raise ScenarioFileError(str(path), "file does not exist or is not accessible")
    try:
        return pd.read_csv(path, comment="#", float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ScenarioFileError(str(path), str(e)) from e
