"""Tests for configuration loading and report file I/O."""

from pathlib import Path

import orjson
import pandas as pd
import pytest

from gridvest import __version__
from gridvest.core import (
    DEFAULT_OUTPUT_DIR,
    ensure_output_directory,
    header_line,
    load_config,
    read_json,
    read_report_csv,
    write_csv,
    write_json,
)
from gridvest.exceptions import ConfigError, ScenarioFileError


def write_config(path: Path, data: dict) -> Path:
    path.write_bytes(orjson.dumps(data))
    return path


class TestLoadConfig:
    """Defaults < file < overrides."""

    def test_defaults(self):
        config = load_config()

        assert config.grid.years == 15
        assert config.planning.types == [1, 2, 4, 8]
        assert config.planning.allow_curtailment is False
        assert config.paths.output_dir == DEFAULT_OUTPUT_DIR
        assert config.solver.feas_tol == 1e-7

    def test_file_then_overrides(self, tmp_path):
        path = write_config(tmp_path / "run.json", {"grid": {"years": 3, "start_year": 2030}, "seed": 9})

        config = load_config(path, overrides={"grid": {"years": 2}})

        assert config.grid.years == 2
        assert config.grid.start_year == 2030
        assert config.seed == 9

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path / "run.json", {"grid": {"yeers": 3}})

        with pytest.raises(ConfigError) as exc_info:
            load_config(path)

        assert exc_info.value.message == "Configuration is invalid."
        assert "[grid -> yeers]" in exc_info.value.details
        assert exc_info.value.exit_code == 2

    def test_types_are_validated_and_sorted(self):
        assert load_config(overrides={"planning": {"types": [8, 1, 8]}}).planning.types == [1, 8]

        with pytest.raises(ConfigError, match="invalid"):
            load_config(overrides={"planning": {"types": [3]}})

    @pytest.mark.parametrize("betas", [[], [0.2, 0.1], [1.2]])
    def test_bad_betas(self, betas):
        with pytest.raises(ConfigError):
            load_config(overrides={"igdt": {"betas": betas}})

    def test_missing_scenario_path(self, tmp_path):
        with pytest.raises(ConfigError, match="paths.scenario does not exist"):
            load_config(overrides={"paths": {"scenario": str(tmp_path / "nope.csv")}})

    def test_path_check_can_be_skipped(self, tmp_path):
        config = load_config(overrides={"paths": {"scenario": str(tmp_path / "nope.csv")}}, check_paths=False)

        assert config.paths.scenario == tmp_path / "nope.csv"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioFileError) as exc_info:
            load_config(tmp_path / "absent.json")

        assert "does not exist" in exc_info.value.reason


class TestReadJson:
    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")

        with pytest.raises(ScenarioFileError, match="Cannot read"):
            read_json(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")

        with pytest.raises(ScenarioFileError) as exc_info:
            read_json(path)

        assert "object" in exc_info.value.reason


class TestReportFiles:
    def test_output_directory_created(self, tmp_path):
        target = tmp_path / "a" / "b"

        assert ensure_output_directory(target) == target
        assert target.is_dir()

    def test_json_meta_block(self, tmp_path):
        path = write_json({"objective": 1.5, "years": [1, 2]}, "nested/summary.json", tmp_path, seed=4)

        data = read_json(path)

        assert path == tmp_path / "summary.json"
        assert data["objective"] == 1.5
        assert data["meta"]["tool"] == "gridvest"
        assert data["meta"]["version"] == __version__
        assert data["meta"]["seed"] == 4
        assert data["meta"]["generated"].endswith("Z")

    def test_csv_header_and_precision(self, tmp_path):
        frame = pd.DataFrame({"y": [1, 2], "value": [1 / 3, 2.0]})

        path = write_csv(frame, "values.csv", tmp_path, seed=11)

        lines = path.read_text().splitlines()
        assert lines[0].startswith(f"# gridvest {__version__} seed=11 generated=")
        assert lines[1] == "y,value"
        assert lines[2] == "1,0.333333"

    def test_csv_read_back(self, tmp_path):
        frame = pd.DataFrame({"y": [1, 2], "value": [0.25, 2.5]})

        loaded = read_report_csv(write_csv(frame, "values.csv", tmp_path))

        pd.testing.assert_frame_equal(loaded, frame)

    def test_header_line_fixed_timestamp(self):
        assert header_line(3, "2025-01-01T00:00:00Z") == f"# gridvest {__version__} seed=3 generated=2025-01-01T00:00:00Z"

    def test_read_missing_csv(self, tmp_path):
        with pytest.raises(ScenarioFileError):
            read_report_csv(tmp_path / "missing.csv")
