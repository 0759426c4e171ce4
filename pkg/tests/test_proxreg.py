# pyright: basic

"""Tests for the regularization operator, its proximal form, and the grid oracle."""

import math

import numpy as np
import pytest

from outreg.datasets import make_rng
from outreg.errors import DimensionError, InputDomainError
from outreg.proxreg import (
    Tolerance,
    brute_force_prox,
    objective_prox,
    regularize_matrix,
    regularize_scalar,
    soft_threshold,
    soft_threshold_array,
    variational_solve,
)


class TestTolerance:
    @pytest.mark.parametrize("value", [0.0, -1.0, math.nan, math.inf])
    def test_rejects_invalid(self, value):
        with pytest.raises(InputDomainError):
            Tolerance(value)

    def test_coerce(self):
        tol = Tolerance(0.5)
        assert Tolerance.coerce(tol) is tol
        assert Tolerance.coerce(0.5) == tol
        assert float(tol) == 0.5


class TestRegularizeScalar:
    @pytest.mark.parametrize(
        ("y", "f", "delta", "expected"),
        [
            (5.0, 0.0, 1.0, 1.0),
            (-5.0, 0.0, 1.0, -1.0),
            (0.5, 0.0, 1.0, 0.5),
            (1.0, 0.0, 1.0, 1.0),
            (-1.0, 0.0, 1.0, -1.0),
            (0.0, 0.0, 1.0, 0.0),
            (10.0, 2.0, 0.25, 2.25),
        ],
    )
    def test_examples(self, y, f, delta, expected):
        assert regularize_scalar(y, f, delta) == expected

    @pytest.mark.parametrize("factor", [2.0, 10.0, 1e3])
    def test_outlyingness_insensitive(self, factor):
        f, delta = 1.5, 0.2
        for residual in (0.7, -0.9):
            base = regularize_scalar(f + residual, f, delta)
            assert regularize_scalar(f + factor * residual, f, delta) == base

    def test_rejects_non_finite(self):
        with pytest.raises(InputDomainError):
            regularize_scalar(math.nan, 0.0, 1.0)
        with pytest.raises(InputDomainError):
            regularize_scalar(1.0, 0.0, 0.0)


class TestSoftThreshold:
    @pytest.mark.parametrize(
        ("t", "delta", "expected"),
        [(3.0, 1.0, 2.0), (-3.0, 1.0, -2.0), (0.5, 1.0, 0.0), (1.0, 1.0, 0.0), (-1.0, 1.0, 0.0), (0.0, 2.0, 0.0)],
    )
    def test_examples(self, t, delta, expected):
        assert soft_threshold(t, delta) == expected

    def test_array_matches_scalar(self):
        values = np.array([-3.0, -0.5, 0.0, 0.25, 2.0])
        expected = [soft_threshold(v, 0.5) for v in values]
        assert soft_threshold_array(values, 0.5).tolist() == expected


class TestRegularizeMatrix:
    def test_example(self):
        X = np.array([[0.0, 5.0], [-4.0, 1.1]])
        F = np.array([[0.0, 1.0], [0.0, 1.0]])
        outcome = regularize_matrix(X, F, 0.5)
        assert outcome.regularized.tolist() == [[0.0, 1.5], [-0.5, 1.1]]
        assert outcome.outlier_mask.tolist() == [[False, True], [True, False]]
        assert outcome.num_outliers == 2

    def test_idempotent(self):
        rng = make_rng(1)
        X = rng.normal(0.0, 3.0, (20, 30))
        F = rng.normal(0.0, 1.0, (20, 30))
        first = regularize_matrix(X, F, 0.37)
        second = regularize_matrix(first.regularized, F, 0.37)
        assert np.array_equal(second.regularized, first.regularized)
        assert second.num_outliers == 0

    def test_entries_on_the_band_are_not_counted(self):
        F = np.array([[0.1, 0.7], [-0.3, 2.0]])
        X = F + 0.2 * np.array([[1.0, -1.0], [1.0, 0.0]])
        X[1, 1] = 9.0
        outcome = regularize_matrix(X, F, 0.2)
        assert outcome.outlier_mask.tolist() == [[False, False], [False, True]]
        assert outcome.num_outliers == 1
        assert np.array_equal(outcome.regularized[0], X[0])

    def test_equals_shrinkage_form(self):
        rng = make_rng(2)
        X = rng.normal(0.0, 2.0, 100_000)
        F = rng.normal(0.0, 2.0, 100_000)
        delta = 0.3
        expected = X + soft_threshold_array(F - X, delta)
        actual = regularize_matrix(X, F, delta).regularized
        bound = 8 * np.finfo(np.float64).eps * (np.abs(X) + np.abs(F) + delta)
        assert np.all(np.abs(actual - expected) <= bound)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            regularize_matrix(np.zeros((2, 3)), np.zeros((3, 2)), 1.0)

    def test_non_finite(self):
        with pytest.raises(InputDomainError):
            regularize_matrix(np.array([[np.inf]]), np.zeros((1, 1)), 1.0)


class TestVariationalSolve:
    def test_bit_identical_to_regularize(self):
        rng = make_rng(3)
        y = rng.normal(0.0, 1.0, (50, 40))
        f = y + rng.normal(0.0, 1.0, (50, 40))
        for delta in (1e-3, 0.1, 0.7, 5.0):
            assert np.array_equal(variational_solve(y, f, delta), regularize_matrix(y, f, delta).regularized)

    def test_matches_grid_oracle(self):
        rng = make_rng(4)
        y = rng.uniform(-1.0, 1.0, 1000)
        f = rng.uniform(-1.0, 1.0, 1000)
        deltas = rng.uniform(1e-3, 1.0, 1000)
        step = 1e-4

        for y_i, f_i, d in zip(y, f, deltas):
            closed = variational_solve(np.array([y_i]), np.array([f_i]), d)
            grid = brute_force_prox(np.array([y_i]), np.array([f_i]), d, step)
            assert objective_prox([y_i], closed, [f_i], d) <= objective_prox([y_i], grid, [f_i], d) + 1e-12
            assert abs(closed[0] - grid[0]) <= step + 1e-12

    def test_matrix_block_matches_grid_oracle(self):
        rng = make_rng(5)
        for _ in range(100):
            X = rng.normal(0.0, 1.0, (3, 3))
            F = rng.normal(0.0, 1.0, (3, 3))
            delta = float(rng.uniform(0.05, 1.0))
            Z = regularize_matrix(X, F, delta).regularized
            grid = brute_force_prox(X, F, delta, step=1e-3)
            assert objective_prox(X, Z, F, delta) <= objective_prox(X, grid, F, delta) + 1e-12


class TestObjectiveProx:
    def test_example(self):
        # |3 - 1| + (1 - 0)^2 / (2 * 0.5) = 2 + 1
        assert objective_prox([3.0], [1.0], [0.0], 0.5) == 3.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            objective_prox([1.0, 2.0], [1.0], [1.0], 1.0)
