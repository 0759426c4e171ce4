# pyright: basic

"""Tests for outlier-regularized regression and its L1 limit."""

import numpy as np
import pytest

from outreg.datasets import LineDatasetSpec, gen_line_dataset, make_rng
from outreg.errors import ConvergenceWarning, DimensionError, InputDomainError
from outreg.orlr import (
    OrlrConfig,
    OrlrSolver,
    fit_orlr,
    l1_regression,
    l1_regression_path,
    objective_orlr,
    ols_fit,
    predict,
)


no_convergence_warnings = pytest.mark.filterwarnings("ignore::outreg.errors.ConvergenceWarning")


@pytest.fixture
def line_data():
    return gen_line_dataset(LineDatasetSpec())


PLANTED = [3, 6, 9]


def planted_line():
    """Thirteen points on y = x + 0.5 with three of them pushed off the line by +3, -2.5 and +4."""

    x = np.linspace(0.0, 1.0, 13)
    y = x + 0.5
    y[PLANTED] += [3.0, -2.5, 4.0]
    return x.reshape(1, -1), y


class TestOlsFit:
    def test_exact_line(self):
        X = np.array([[0.0, 1.0, 2.0, 3.0]])
        a, b = ols_fit(X, 2.0 * X[0] + 1.0)
        assert a == pytest.approx([2.0])
        assert b == pytest.approx(1.0)

    def test_location_only(self):
        a, b = ols_fit(np.zeros((0, 3)), [1.0, 2.0, 6.0])
        assert a.shape == (0,)
        assert b == pytest.approx(3.0)

    def test_rank_deficient_design(self):
        # Two samples, two features: infinitely many exact fits, the pseudo-inverse picks one.
        X = np.array([[1.0, 2.0], [2.0, 4.0]])
        a, b = ols_fit(X, [1.0, 3.0])
        assert predict(X, a, b) == pytest.approx([1.0, 3.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            ols_fit(np.zeros((1, 3)), [1.0, 2.0])

    @pytest.mark.parametrize("seed", range(5))
    def test_solves_the_normal_equations(self, seed):
        rng = make_rng(seed)
        X = rng.normal(0.0, 1.0, (3, 25))
        t = rng.normal(0.0, 1.0, 25)
        a, b = ols_fit(X, t)

        design = np.vstack([X, np.ones(25)])
        residual = t - predict(X, a, b)
        assert np.linalg.norm(design @ residual) < 1e-8


class TestConfig:
    @pytest.mark.parametrize("kwargs", [{"delta": 0.0}, {"delta": 1.0, "max_iters": 0}, {"delta": 1.0, "tol": 0.0}])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(InputDomainError):
            OrlrConfig(**kwargs)

    def test_with_delta(self):
        config = OrlrConfig(1.0, max_iters=7).with_delta(0.5)
        assert config.delta.delta == 0.5
        assert config.max_iters == 7


class TestFitOrlr:
    def test_exact_line(self):
        X = np.linspace(0.0, 1.0, 8).reshape(1, -1)
        y = 3.0 * X[0] - 1.0
        result = fit_orlr(X, y, OrlrConfig(0.1))
        assert result.converged
        assert result.iterations == 1
        assert result.num_outliers == 0
        assert result.a == pytest.approx([3.0])
        assert result.b == pytest.approx(-1.0)

    def test_huge_delta_is_least_squares(self, line_data):
        X, y = line_data
        result = fit_orlr(X, y, OrlrConfig(1e6))
        a, b = ols_fit(X, y)
        assert result.num_outliers == 0
        assert result.a == pytest.approx(a)
        assert result.b == pytest.approx(b)

    def test_flags_planted_outliers(self):
        X, y = planted_line()
        result = fit_orlr(X, y, OrlrConfig(0.5))
        assert result.converged
        assert np.flatnonzero(result.outlier_mask).tolist() == PLANTED
        # The clamped targets sit +0.5, -0.5, +0.5 off the line, symmetric in x, so only the intercept moves.
        assert result.a == pytest.approx([1.0], abs=1e-4)
        assert result.b == pytest.approx(0.55, abs=1e-4)
        assert result.fitted == pytest.approx(predict(X, result.a, result.b))

    def test_objective_trace_matches_result(self, line_data):
        X, y = line_data
        result = fit_orlr(X, y, OrlrConfig(0.5))
        expected = objective_orlr(y, result.y_tilde, result.a, result.b, X, 0.5)
        assert result.objective_trace[-1] == pytest.approx(expected, rel=1e-12)

    @no_convergence_warnings
    def test_monotone_descent(self):
        rng = np.random.Generator(np.random.PCG64(11))
        for _ in range(50):
            X = rng.uniform(-1.0, 1.0, (2, 30))
            y = X.T @ rng.normal(0.0, 1.0, 2) + 0.3 + rng.normal(0.0, 0.05, 30)
            outliers = rng.choice(30, size=5, replace=False)
            y[outliers] += rng.normal(0.0, 5.0, 5)
            result = fit_orlr(X, y, OrlrConfig(0.1, max_iters=500))
            trace = np.array(result.objective_trace)
            assert np.all(np.diff(trace) <= 1e-12 * max(1.0, trace[0]))

    def test_trace_can_be_disabled(self, line_data):
        X, y = line_data
        result = fit_orlr(X, y, OrlrConfig(0.5, record_trace=False))
        assert result.objective_trace == []
        assert result.iterations > 0

    @no_convergence_warnings
    def test_iteration_cap(self, line_data):
        X, y = line_data
        result = fit_orlr(X, y, OrlrConfig(0.01, max_iters=1))
        assert result.iterations == 1
        assert not result.converged

    def test_iteration_cap_warns(self, line_data):
        X, y = line_data
        with pytest.warns(ConvergenceWarning):
            fit_orlr(X, y, OrlrConfig(0.01, max_iters=1))


def _chain(X, y, delta, init, steps):
    # One iteration per call: the stopping rule never gets a say.
    a, b = init
    for _ in range(steps):
        result = fit_orlr(X, y, OrlrConfig(delta, max_iters=1), init=(a, b))
        a, b = result.a, result.b
    return a, b


class TestOutlyingnessInsensitivity:
    @no_convergence_warnings
    def test_scaled_outliers_reproduce_fit(self):
        X, y = planted_line()
        delta = 0.5
        settled = fit_orlr(X, y, OrlrConfig(delta))
        mask = settled.outlier_mask

        y_far = y.copy()
        y_far[mask] = settled.fitted[mask] + 10.0 * (y[mask] - settled.fitted[mask])

        near = _chain(X, y, delta, (settled.a, settled.b), 60)
        far = _chain(X, y_far, delta, (settled.a, settled.b), 60)

        assert np.array_equal(far[0], near[0])
        assert far[1] == near[1]
        assert far[0] == pytest.approx(settled.a, abs=1e-4)
        assert far[1] == pytest.approx(settled.b, abs=1e-4)

    @no_convergence_warnings
    def test_chained_fit_is_a_fixed_point(self):
        X, y = planted_line()
        a, b = _chain(X, y, 0.5, ols_fit(X, y), 80)
        a_next, b_next = _chain(X, y, 0.5, (a, b), 1)
        assert a_next == pytest.approx(a, abs=1e-12)
        assert b_next == pytest.approx(b, abs=1e-12)
        assert b == pytest.approx(0.55, abs=1e-12)


class TestSolverProtocol:
    def test_steps(self):
        X, y = planted_line()
        solver = OrlrSolver(X, y, OrlrConfig(0.5))
        steps = list(solver)
        assert [step.iteration for step in steps] == list(range(1, len(steps) + 1))
        assert solver.converged
        assert next(iter(solver), None) is None

    def test_repr(self):
        X, y = planted_line()
        assert repr(OrlrSolver(X, y, OrlrConfig(0.5))) == "OrlrSolver(shape=(1, 13), iteration=0)"


class TestL1Regression:
    @no_convergence_warnings
    def test_location_median(self):
        a, b = l1_regression(np.zeros((0, 3)), [1.0, 2.0, 100.0])
        assert a.shape == (0,)
        assert b == pytest.approx(2.0, abs=1e-3)

    def test_exact_line_short_circuits(self):
        X = np.array([[0.0, 1.0, 2.0]])
        path = l1_regression_path(X, [1.0, 2.0, 3.0])
        assert len(path) == 1
        assert path[0].a == pytest.approx([1.0])
        assert path[0].converged

    @no_convergence_warnings
    def test_resists_outliers(self):
        X, y = planted_line()
        a, b = l1_regression(X, y)
        assert a == pytest.approx([1.0], abs=1e-3)
        assert b == pytest.approx(0.5, abs=1e-3)

    @pytest.mark.parametrize("schedule", [[], [0.1, 0.2], [1.0, -0.1], [0.5, 0.5]])
    def test_rejects_bad_schedules(self, schedule):
        with pytest.raises(InputDomainError):
            l1_regression(np.zeros((0, 3)), [1.0, 2.0, 3.0], schedule=schedule)

    @no_convergence_warnings
    def test_explicit_schedule(self):
        rng = make_rng(0)
        X = rng.uniform(0.0, 1.0, (1, 20))
        y = 2.0 * X[0] + rng.normal(0.0, 0.01, 20)
        path = l1_regression_path(X, y, schedule=[0.5, 0.05, 0.005])
        assert len(path) == 3
        assert path[-1].a == pytest.approx([2.0], abs=0.05)

    @no_convergence_warnings
    def test_matches_a_grid_search(self):
        rng = make_rng(4)
        x = rng.uniform(0.0, 1.0, 30)
        y = 1.5 * x - 0.2 + rng.normal(0.0, 0.05, 30)
        y[[2, 11, 17, 25]] += [2.0, -3.0, 4.0, 1.5]
        a, b = l1_regression(x.reshape(1, -1), y)

        slopes, intercepts = np.meshgrid(np.linspace(0.5, 2.5, 401), np.linspace(-1.0, 0.6, 401), indexing="ij")
        residual = y - (slopes[..., None] * x + intercepts[..., None])
        best_on_grid = float(np.abs(residual).sum(axis=-1).min())

        fitted_error = float(np.sum(np.abs(y - predict(x.reshape(1, -1), a, b))))
        assert fitted_error <= 1.02 * best_on_grid
