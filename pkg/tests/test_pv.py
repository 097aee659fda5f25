"""Tests for PV cell temperature and output."""

import logging

import numpy as np
import pytest

from gridvest.models import PvConfig
from gridvest.pv import PvParams, build_pv_profile, cell_temperature, pv_power
from gridvest.timeseries import TimeGrid, synth_scenario


class TestCellTemperature:
    @pytest.mark.parametrize(
        ("t_amb", "irradiance", "noct", "expected"),
        [
            (20.0, 0.0, 45.0, 20.0),
            (25.0, 800.0, 45.0, 50.0),
            (10.0, 400.0, 44.0, 22.0),
        ],
    )
    def test_noct_model(self, t_amb, irradiance, noct, expected):
        params = PvParams(noct=noct)

        assert float(cell_temperature(t_amb, irradiance, params)) == pytest.approx(expected)


class TestPvPower:
    def test_standard_test_conditions(self):
        """At STC with a perfect panel the output is the rating."""
        params = PvParams(rating=100.0, efficiency=1.0)
        # Ambient chosen so the cell sits exactly at 25 degC.
        t_amb = 25.0 - (params.noct - 20.0) / 800.0 * 1000.0

        assert float(pv_power(t_amb, 1000.0, params)) == pytest.approx(100.0)

    def test_no_sun(self):
        assert float(pv_power(30.0, 0.0, PvParams())) == 0.0

    def test_hand_evaluated_point(self):
        """T_cell = 30 + 24/800*500 = 45; 95 * 0.5 * (1 - 0.004*20) = 43.7 kW."""
        params = PvParams(rating=100.0, efficiency=0.95, gamma=0.004, noct=44.0, i_stc=1000.0, t_stc=25.0)

        assert float(pv_power(30.0, 500.0, params)) == pytest.approx(43.7)

    def test_clamped_at_zero(self):
        params = PvParams(gamma=0.05)

        assert float(pv_power(40.0, 900.0, params)) == 0.0

    def test_vectorised(self):
        out = pv_power(np.array([20.0, 20.0]), np.array([0.0, 1000.0]), PvParams())

        assert out.shape == (2,)
        assert out[0] == 0.0 and out[1] > 0.0

    @pytest.mark.parametrize("field", ["rating", "gamma"])
    def test_rejects_negative_parameters(self, field):
        with pytest.raises(ValueError, match=field):
            PvParams(**{field: -1.0})


class TestProfile:
    def test_zero_irradiance(self, one_year, make_scenario):
        profile, report = build_pv_profile(make_scenario(one_year, irradiance=0.0), PvParams())

        assert not profile.any()
        assert report.clamped_slots == 0

    def test_constant_stc(self, one_year, make_scenario):
        params = PvParams(rating=250.0, efficiency=0.9)
        t_amb = 25.0 - (params.noct - 20.0) / 800.0 * 1000.0
        scenario = make_scenario(one_year, irradiance=1000.0, ambient=t_amb)

        profile, _ = build_pv_profile(scenario, params)

        np.testing.assert_allclose(profile, 225.0)

    def test_matches_elementwise_evaluation(self):
        scenario = synth_scenario(1, TimeGrid(years=2))
        params = PvParams.from_config(PvConfig())

        profile, _ = build_pv_profile(scenario, params)

        expected = [
            float(pv_power(t, i, params)) for t, i in zip(scenario.ambient_temp, scenario.irradiance, strict=True)
        ]
        np.testing.assert_allclose(profile, expected, rtol=0, atol=1e-12)
        assert not profile.flags.writeable

    def test_clamping_is_reported(self, one_year, make_scenario, caplog):
        scenario = make_scenario(one_year, irradiance=900.0, ambient=60.0)

        with caplog.at_level(logging.WARNING, logger="gridvest.pv"):
            profile, report = build_pv_profile(scenario, PvParams(gamma=0.03))

        assert report.clamped_slots == one_year.num_slots
        assert report.min_raw_output < 0
        assert not profile.any()
        assert "clamped" in caplog.text
