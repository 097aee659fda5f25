"""Tests for the embedded LP/MILP engine."""

import itertools
import time

import numpy as np
import pytest

from gridvest.milp import (
    Model,
    Relation,
    SolverOptions,
    SolveStatus,
    VarId,
    format_lp,
    solve_lp,
    solve_milp,
    verify_solution,
    write_lp,
)


def knapsack() -> tuple[Model, VarId, VarId]:
    model = Model("knapsack")
    a = model.add_binary("a")
    b = model.add_binary("b")
    model.add_constraint([(a, 2.0), (b, 3.0)], Relation.LE, 4.0, "weight")
    model.set_objective([(a, -3.0), (b, -4.0)])
    return model, a, b


def random_instance(seed: int, binaries: int = 6, continuous: int = 3, rows: int = 4) -> Model:
    """Bounded instance: random <= rows, a covering row and a big-M style link."""
    rng = np.random.default_rng(seed)
    model = Model(f"random_{seed}")
    z = [model.add_binary(f"z{i}") for i in range(binaries)]
    x = [model.add_var(f"x{i}", 0.0, 10.0) for i in range(continuous)]
    columns = z + x
    for r in range(rows):
        coefs = rng.integers(-4, 6, size=len(columns)).astype(float)
        rhs = float(rng.integers(0, 12))
        model.add_constraint(list(zip(columns, coefs, strict=True)), Relation.LE, rhs, f"r{r}")
    # One covering row forces some binaries on.
    model.add_constraint([(v, 1.0) for v in z[:3]], Relation.GE, 1.0, "cover")
    model.add_constraint([(v, 1.0) for v in x] + [(z[0], -5.0)], Relation.LE, 12.0, "link")
    objective = rng.uniform(-5.0, 5.0, size=len(columns))
    model.set_objective(list(zip(columns, objective, strict=True)))
    return model


def sized_instance(seed: int) -> Model:
    """Instance whose size varies with the seed, up to 10 binaries, 12 continuous and 20 rows."""
    rng = np.random.default_rng(10_000 + seed)
    binaries = 10 if seed % 20 == 0 else int(rng.integers(3, 9))
    return random_instance(seed, binaries, int(rng.integers(1, 13)), int(rng.integers(1, 19)))


def brute_force(model: Model) -> float | None:
    compiled = model.compile()
    binaries = compiled.binary
    best = None
    for assignment in itertools.product((0.0, 1.0), repeat=len(binaries)):
        lower = compiled.lo.copy()
        upper = compiled.hi.copy()
        lower[binaries] = upper[binaries] = assignment
        result = solve_lp(model, lower=lower, upper=upper)
        if result.is_optimal and (best is None or result.objective < best):
            best = result.objective
    return best


class TestLinearPrograms:
    """Revised simplex on small hand-checkable programs."""

    def test_single_lower_bound(self):
        """min x s.t. x >= 3 gives x = 3."""
        model = Model()
        x = model.add_var("x")
        model.add_constraint([(x, 1.0)], Relation.GE, 3.0)
        model.set_objective([(x, 1.0)])

        result = solve_lp(model)

        assert result.status is SolveStatus.OPTIMAL
        assert result.value(x) == pytest.approx(3.0)
        assert result.objective == pytest.approx(3.0)

    def test_maximisation_by_negation(self):
        """min -x-y s.t. x+y <= 4, x <= 2 reaches -4."""
        model = Model()
        x = model.add_var("x")
        y = model.add_var("y")
        model.add_constraint([(x, 1.0), (y, 1.0)], Relation.LE, 4.0)
        model.add_constraint([(x, 1.0)], Relation.LE, 2.0)
        model.set_objective([(x, -1.0), (y, -1.0)])

        result = solve_lp(model)

        assert result.is_optimal
        assert result.objective == pytest.approx(-4.0)
        assert result.value(x) + result.value(y) == pytest.approx(4.0)

    def test_contradiction_is_infeasible(self):
        model = Model()
        x = model.add_var("x", lo=-10.0)
        model.add_constraint([(x, 1.0)], Relation.GE, 1.0)
        model.add_constraint([(x, 1.0)], Relation.LE, 0.0)
        model.set_objective([(x, 1.0)])

        assert solve_lp(model).status is SolveStatus.INFEASIBLE

    def test_unbounded_direction(self):
        model = Model()
        x = model.add_var("x")
        y = model.add_var("y")
        model.add_constraint([(x, 1.0), (y, -1.0)], Relation.LE, 1.0)
        model.set_objective([(x, -1.0)])

        assert solve_lp(model).status is SolveStatus.UNBOUNDED

    def test_equality_rows_and_objective_constant(self):
        model = Model()
        x = model.add_var("x")
        y = model.add_var("y")
        model.add_constraint([(x, 1.0), (y, 2.0)], Relation.EQ, 6.0)
        model.set_objective([(x, 1.0), (y, 1.0)], constant=10.0)

        result = solve_lp(model)

        assert result.is_optimal
        assert result.value(y) == pytest.approx(3.0)
        assert result.objective == pytest.approx(13.0)

    def test_badly_scaled_rows(self):
        """Coefficients spanning many magnitudes still verify."""
        model = Model()
        x = model.add_var("x")
        y = model.add_var("y")
        model.add_constraint([(x, 1e5), (y, 1.0)], Relation.GE, 2e5)
        model.add_constraint([(x, 1e-3), (y, 1e-3)], Relation.LE, 5.0)
        model.set_objective([(x, 3.0), (y, 1e-4)])

        result = solve_lp(model)

        assert result.is_optimal
        assert not verify_solution(model, result.values)
        assert result.objective == pytest.approx(min(3.0 * 2.0, 1e-4 * 2e5))


class TestBranchAndBound:
    """Binary branch-and-bound against enumeration."""

    def test_knapsack(self):
        """min -(3a+4b) s.t. 2a+3b <= 4 picks b only."""
        model, a, b = knapsack()

        result = solve_milp(model)

        assert result.status is SolveStatus.OPTIMAL
        assert result.value(a) == pytest.approx(0.0)
        assert result.value(b) == pytest.approx(1.0)
        assert result.objective == pytest.approx(-4.0)
        assert result.mip_gap <= 1e-6

    def test_without_binaries_matches_lp(self):
        model = Model()
        x = model.add_var("x", hi=5.0)
        y = model.add_var("y", hi=5.0)
        model.add_constraint([(x, 2.0), (y, 1.0)], Relation.LE, 8.0)
        model.set_objective([(x, -3.0), (y, -2.0)])

        lp = solve_lp(model)
        mip = solve_milp(model)

        assert mip.status is lp.status
        assert mip.objective == lp.objective
        np.testing.assert_array_equal(mip.values, lp.values)

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_enumeration(self, seed):
        model = sized_instance(seed)

        expected = brute_force(model)
        result = solve_milp(model)

        if expected is None:
            assert result.status is SolveStatus.INFEASIBLE
        else:
            assert result.status is SolveStatus.OPTIMAL
            assert result.objective == pytest.approx(expected, rel=1e-5, abs=1e-6)
            assert not verify_solution(model, result.values)

    def test_hundred_instances_within_ten_seconds(self):
        models = [sized_instance(seed) for seed in range(100)]

        start = time.perf_counter()
        results = [solve_milp(model) for model in models]
        elapsed = time.perf_counter() - start

        assert elapsed < 10.0
        assert all(r.status in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE) for r in results)

    def test_same_model_same_answer(self):
        model = random_instance(7)

        first = solve_milp(model)
        second = solve_milp(model)

        np.testing.assert_array_equal(first.values, second.values)

    def test_node_limit_returns_incumbent_with_gap(self):
        """Root rounding gives a = 1, b = 0; stopping there leaves a gap."""
        model, _, _ = knapsack()

        result = solve_milp(model, SolverOptions(node_limit=1))

        assert result.status is SolveStatus.GAP_LIMIT
        assert result.objective == pytest.approx(-3.0)
        assert result.mip_gap > 0
        assert result.bound < result.objective

    def test_infeasible_root(self):
        model = Model()
        z = model.add_binary("z")
        model.add_constraint([(z, 1.0)], Relation.GE, 0.4)
        model.add_constraint([(z, 1.0)], Relation.LE, 0.6)

        assert solve_milp(model).status is SolveStatus.INFEASIBLE


class TestVerification:
    """Independent row, bound and integrality checks."""

    def test_reports_each_kind(self):
        model = Model()
        x = model.add_var("x", hi=1.0)
        z = model.add_binary("z")
        model.add_constraint([(x, 1.0), (z, 1.0)], Relation.LE, 1.0, "cap")

        violations = verify_solution(model, np.array([2.0, 0.5]))

        kinds = {v.kind for v in violations}
        assert kinds == {"bound", "integrality", "row"}
        assert any(str(v).startswith("row cap: violated by") for v in violations)

    def test_clean_point(self):
        model, _, _ = knapsack()

        assert verify_solution(model, np.array([0.0, 1.0])) == []
        assert model.objective_value(np.array([0.0, 1.0])) == -4.0

    def test_integrality_can_be_skipped(self):
        model, _, _ = knapsack()

        assert verify_solution(model, np.array([0.5, 0.5]), check_integrality=False) == []


class TestModelBuilding:
    def test_rejects_foreign_variable(self):
        other = Model("other")
        stranger = other.add_var("s")
        model = Model()
        model.add_var("x")

        with pytest.raises(ValueError, match="undeclared"):
            model.add_constraint([(stranger, 1.0)], Relation.LE, 1.0)

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValueError, match="exceeds"):
            Model().add_var("x", lo=2.0, hi=1.0)

    def test_relaxed_copy_has_no_binaries(self):
        model, _, _ = knapsack()

        relaxed = model.relaxed()

        assert relaxed.compile().binary.size == 0
        assert model.compile().binary.size == 2

    def test_lp_format(self, tmp_path):
        model, _, _ = knapsack()

        text = format_lp(model)
        path = write_lp(model, tmp_path / "knapsack.lp")

        assert text.startswith("\\ Model knapsack")
        assert " weight: 2 a + 3 b <= 4" in text
        assert "Binaries" in text
        assert text.rstrip().endswith("End")
        assert path.read_text() == text
