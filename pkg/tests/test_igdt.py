"""Tests for robustness and opportunity radii.

Most cases use a battery-free instance without PV: its cost is linear in the
EV scaling, ``cost(alpha) = anchor +/- alpha * s`` with ``s`` the discounted EV
energy bill, so the exact radius is ``beta * anchor / s``.
"""

from dataclasses import replace

import numpy as np
import pytest

from gridvest.core import load_config
from gridvest.exceptions import PlanInfeasibleError
from gridvest.igdt import (
    INFEASIBLE_BEYOND,
    SATURATED,
    UNATTAINABLE,
    DeviationGrid,
    band_check,
    evaluate_scaled,
    feasible_limit,
    opportunity_radius,
    read_curve,
    robust_radius,
    sweep,
    write_curve,
)
from gridvest.planner import problem_from_config, solve_plan

LOAD, EV, PRICE = 10.0, 5.0, 0.2
TOL = 1e-3


@pytest.fixture
def linear_problem(one_year, make_scenario, make_problem):
    return make_problem(make_scenario(one_year, load=LOAD, ev=EV, price=PRICE)).no_battery()


@pytest.fixture
def midday_surplus(one_year, make_scenario, make_problem):
    """8 kW of PV from 9:00 to 15:00 against a flat 10 kW load, no battery.

    Cost falls linearly as ``184 - 56 * alpha`` kWh a day until PV exceeds the
    load at ``alpha = 0.25``.
    """
    pv = [0.0] * 8 + [8.0] * 7 + [0.0] * 9
    return make_problem(make_scenario(one_year, load=LOAD, price=PRICE), pv=pv).no_battery()


def exact_radius(beta: float) -> float:
    return beta * (LOAD + EV) / EV


class TestEvaluateScaled:
    def test_zero_radius_is_deterministic(self, linear_problem):
        anchor = solve_plan(linear_problem).objective

        assert evaluate_scaled(linear_problem, 0.0, 0.0, "worst") == anchor
        assert evaluate_scaled(linear_problem, 0.0, 0.0, "best") == anchor

    def test_doubled_ev_equals_presolved_series(self, one_year, make_scenario, make_problem):
        prices = [0.1] * 12 + [0.4] * 12
        base = make_problem(make_scenario(one_year, load=LOAD, ev=EV, price=prices), cost=50.0)
        doubled = make_problem(make_scenario(one_year, load=LOAD, ev=2 * EV, price=prices), cost=50.0)

        assert evaluate_scaled(base, 0.0, 1.0, "worst") == pytest.approx(solve_plan(doubled).objective, rel=1e-9)

    def test_directions_bracket_anchor(self, linear_problem):
        anchor = solve_plan(linear_problem).objective

        assert evaluate_scaled(linear_problem, 0.0, 0.2, "worst") > anchor
        assert evaluate_scaled(linear_problem, 0.0, 0.2, "best") < anchor

    @pytest.mark.parametrize("target", ["pv", "ev"])
    def test_cost_is_monotone_along_the_radius(self, one_year, make_scenario, make_problem, target):
        """A battery instance: worst-direction cost rises with alpha, best-direction cost falls."""
        pv = [0.0] * 8 + [4.0] * 8 + [0.0] * 8
        problem = make_problem(
            make_scenario(one_year, load=LOAD, ev=EV, price=[0.1] * 12 + [0.4] * 12), cost=50.0, pv=pv
        )
        ladder = [0.0, 0.1, 0.3, 0.6, 1.0]

        def cost(alpha, direction):
            alpha_pv, alpha_ev = (alpha, 0.0) if target == "pv" else (0.0, alpha)
            return evaluate_scaled(problem, alpha_pv, alpha_ev, direction)

        worst = [cost(a, "worst") for a in ladder]
        best = [cost(a, "best") for a in ladder]

        for lower, higher in zip(worst, worst[1:], strict=False):
            assert higher >= lower * (1 - 1e-6)
        for higher, lower in zip(best, best[1:], strict=False):
            assert lower <= higher * (1 + 1e-6)

    def test_radius_out_of_range(self, linear_problem):
        with pytest.raises(ValueError, match="alpha_ev"):
            evaluate_scaled(linear_problem, 0.0, 1.5, "worst")

    def test_infeasible_scaled_instance(self, one_year, make_scenario, make_problem):
        """Extra PV without curtailment or storage has nowhere to go."""
        pv = [0.0] * 24
        pv[11] = 9.0
        problem = make_problem(make_scenario(one_year, load=LOAD), pv=pv).no_battery()

        with pytest.raises(PlanInfeasibleError):
            evaluate_scaled(problem, 0.5, 0.0, "best")


class TestRobustRadius:
    def test_zero_beta(self, linear_problem):
        result = robust_radius(linear_problem, 0.0, "ev")

        assert result.alpha == 0.0
        assert result.iterations == 0

    @pytest.mark.parametrize("beta", [0.05, 0.1, 0.2])
    def test_matches_closed_form(self, linear_problem, beta):
        result = robust_radius(linear_problem, beta, "ev", alpha_tol=TOL)

        assert result.alpha == pytest.approx(exact_radius(beta), abs=TOL)
        assert result.alpha <= exact_radius(beta) + 1e-6
        assert result.achieved_cost <= result.target_cost * (1 + 1e-6)
        assert result.alpha_ev == result.alpha and result.alpha_pv == 0.0

    def test_saturates(self, linear_problem):
        result = robust_radius(linear_problem, 0.5, "ev", alpha_tol=TOL)

        assert result.alpha == 1.0
        assert SATURATED in result.flags

    def test_insensitive_parameter_saturates(self, linear_problem):
        """No PV means PV losses cost nothing."""
        result = robust_radius(linear_problem, 0.01, "pv")

        assert result.alpha == 1.0
        assert result.flags == (SATURATED,)


class TestOpportunityRadius:
    def test_zero_beta(self, linear_problem):
        assert opportunity_radius(linear_problem, 0.0, "ev").alpha == 0.0

    def test_matches_closed_form(self, linear_problem):
        result = opportunity_radius(linear_problem, 0.1, "ev", alpha_tol=TOL)

        assert result.alpha == pytest.approx(exact_radius(0.1), abs=TOL)
        assert result.alpha >= exact_radius(0.1) - 1e-6
        assert result.achieved_cost <= result.target_cost * (1 + 1e-6)

    def test_unattainable(self, linear_problem):
        result = opportunity_radius(linear_problem, 0.05, "pv", alpha_tol=TOL)

        assert UNATTAINABLE in result.flags
        assert result.alpha == 1.0

    def test_infeasible_tail_is_searched_below(self, midday_surplus):
        """PV at 1.25x nominal covers the whole load; more has nowhere to go."""
        result = opportunity_radius(midday_surplus, 0.05, "pv", alpha_tol=TOL)

        assert UNATTAINABLE not in result.flags
        assert feasible_limit(result.flags) == pytest.approx(0.25, abs=TOL)
        assert result.alpha == pytest.approx(9.2 / 56.0, abs=TOL)
        assert result.alpha < 1.0
        assert result.achieved_cost <= result.target_cost * (1 + 1e-6)

    def test_unattainable_below_infeasible_tail(self, midday_surplus):
        result = opportunity_radius(midday_surplus, 0.5, "pv", alpha_tol=TOL)

        assert UNATTAINABLE in result.flags
        assert any(f.startswith(f"{INFEASIBLE_BEYOND}:") for f in result.flags)
        assert result.alpha == pytest.approx(0.25, abs=TOL)
        assert np.isfinite(result.achieved_cost)

    @pytest.mark.parametrize("beta", [0.05, 0.5])
    def test_infeasible_tail_passes_band_check(self, midday_surplus, beta):
        anchor = solve_plan(midday_surplus).objective
        result = opportunity_radius(midday_surplus, beta, "pv", anchor=anchor, alpha_tol=TOL)

        check = band_check(midday_surplus, result, anchor, TOL)

        assert check.passed, check.message

    def test_understated_feasible_limit_fails_band_check(self, midday_surplus):
        anchor = solve_plan(midday_surplus).objective
        result = opportunity_radius(midday_surplus, 0.05, "pv", anchor=anchor, alpha_tol=TOL)
        moved = replace(result, flags=(f"{INFEASIBLE_BEYOND}:0.100000",))

        check = band_check(midday_surplus, moved, anchor, TOL)

        assert not check.passed
        assert "still feasible" in check.message

class TestSweep:
    def test_zero_beta_rows(self, linear_problem):
        curve = sweep(linear_problem, DeviationGrid((0.0,)), max_workers=1)

        assert len(curve.results) == 4
        assert all(r.alpha == 0.0 for r in curve.results)
        assert [(r.mode, r.param) for r in curve.results] == [
            ("robustness", "pv"),
            ("robustness", "ev"),
            ("opportunity", "pv"),
            ("opportunity", "ev"),
        ]

    def test_monotone_in_beta(self, linear_problem):
        curve = sweep(linear_problem, DeviationGrid((0.05, 0.1, 0.2), "robustness"), alpha_tol=TOL, max_workers=1)

        alphas = [r.alpha for r in curve.select("robustness", "ev")]
        assert alphas == sorted(alphas)
        np.testing.assert_allclose(alphas, [exact_radius(b) for b in (0.05, 0.1, 0.2)], atol=TOL)

    def test_joint_coupling(self, linear_problem):
        curve = sweep(linear_problem, DeviationGrid((0.1,), "opportunity"), coupling="joint", alpha_tol=TOL, max_workers=1)

        (result,) = curve.results
        assert result.param == "joint"
        assert result.coupling == "joint"
        assert result.alpha_pv == result.alpha_ev == result.alpha
        assert result.alpha == pytest.approx(exact_radius(0.1), abs=TOL)

    def test_frame_columns(self, linear_problem):
        curve = sweep(linear_problem, DeviationGrid((0.1,), "robustness"), alpha_tol=TOL, max_workers=1)

        frame = curve.to_frame()

        assert list(frame.columns) == ["beta", "param", "mode", "alpha", "achieved_cost", "iterations", "flags"]
        assert frame.loc[0, "flags"] == SATURATED

    def test_curve_files(self, linear_problem, tmp_path):
        curve = sweep(linear_problem, DeviationGrid((0.1,), "robustness"), alpha_tol=TOL, max_workers=1)

        paths = write_curve(curve, tmp_path, seed=3)
        loaded = read_curve(paths[1])

        assert [p.name for p in paths] == ["igdt_curve.csv", "igdt_curve.json"]
        assert loaded.anchor == curve.anchor
        assert [r.alpha for r in loaded.results] == [r.alpha for r in curve.results]
        assert loaded.results[0].flags == (SATURATED,)


class TestGrid:
    @pytest.mark.parametrize("betas", [(), (0.2, 0.1), (-0.1,), (1.5,)])
    def test_invalid_betas(self, betas):
        with pytest.raises(ValueError, match="beta"):
            DeviationGrid(betas)

    def test_modes(self):
        assert DeviationGrid((0.1,)).modes == ("robustness", "opportunity")
        assert DeviationGrid((0.1,), "opportunity").modes == ("opportunity",)


class TestBandCheck:
    def test_reported_radius_passes(self, linear_problem):
        anchor = solve_plan(linear_problem).objective
        robust = robust_radius(linear_problem, 0.1, "ev", anchor=anchor, alpha_tol=TOL)
        opportunity = opportunity_radius(linear_problem, 0.1, "ev", anchor=anchor, alpha_tol=TOL)

        assert band_check(linear_problem, robust, anchor, TOL).passed
        assert band_check(linear_problem, opportunity, anchor, TOL).passed

    def test_understated_radius_fails(self, linear_problem):
        anchor = solve_plan(linear_problem).objective
        robust = robust_radius(linear_problem, 0.1, "ev", anchor=anchor, alpha_tol=TOL)
        understated = replace(robust, alpha=robust.alpha / 2, alpha_ev=robust.alpha / 2)

        check = band_check(linear_problem, understated, anchor, TOL)

        assert not check.passed
        assert "still fits" in check.message


class TestBothModesSweep:
    """Both modes on a battery instance with PV and EV demand."""

    def test_monotone_and_banded(self, one_year, make_scenario, make_problem):
        pv = [0.0] * 8 + [4.0] * 8 + [0.0] * 8
        problem = make_problem(
            make_scenario(one_year, load=LOAD, ev=EV, price=[0.1] * 12 + [0.4] * 12), cost=50.0, pv=pv
        )
        anchor = solve_plan(problem).objective
        alpha_tol = 0.02

        curve = sweep(problem, DeviationGrid((0.05, 0.1)), alpha_tol=alpha_tol, anchor=anchor, max_workers=1)

        assert len(curve.results) == 8
        for mode in ("robustness", "opportunity"):
            for param in ("pv", "ev"):
                alphas = [r.alpha for r in curve.select(mode, param)]
                assert alphas == sorted(alphas), (mode, param)
        for result in curve.results:
            assert not result.failed
            check = band_check(problem, result, anchor, alpha_tol)
            assert check.passed, (result.mode, result.param, result.beta, check.message)


@pytest.mark.slow
class TestSyntheticSweep:
    """Three representative-day years of synthetic data with a type-4 battery."""

    def test_both_modes_monotone_and_banded(self):
        config = load_config(overrides={"grid": {"years": 3}})
        problem = problem_from_config(config, 4)
        anchor = solve_plan(problem).objective

        curve = sweep(problem, DeviationGrid((0.02, 0.05, 0.1, 0.2), "both"), anchor=anchor, max_workers=1)

        for mode in ("robustness", "opportunity"):
            for param in ("pv", "ev"):
                alphas = [r.alpha for r in curve.select(mode, param)]
                assert alphas == sorted(alphas), (mode, param)
        for result in curve.results:
            assert not result.failed
            assert band_check(problem, result, anchor).passed
