# pyright: basic

import numpy as np
import pytest

from outreg import _typing_compat as _t
from outreg._numerics import as_matrix, as_vector, has_converged, numerical_rank, pinv_solve
from outreg.errors import InputDomainError


class TestValidation:
    def test_as_matrix_rejects_vectors(self):
        with pytest.raises(InputDomainError):
            as_matrix([1.0, 2.0])

    def test_as_matrix_rejects_nan(self):
        with pytest.raises(InputDomainError):
            as_matrix([[1.0, np.nan]])

    @pytest.mark.parametrize("value", [[1.0, 2.0], [[1.0, 2.0]], [[1.0], [2.0]]])
    def test_as_vector_flattens(self, value):
        assert as_vector(value).tolist() == [1.0, 2.0]

    def test_as_vector_rejects_matrix(self):
        with pytest.raises(InputDomainError):
            as_vector(np.ones((2, 2)))


class TestPinvSolve:
    def test_rank_deficient_gives_minimum_norm(self):
        gram = np.array([[1.0, 1.0], [1.0, 1.0]])
        rhs = np.array([2.0, 2.0])
        assert np.allclose(pinv_solve(gram, rhs), [1.0, 1.0])


class TestNumericalRank:
    def test_zero(self):
        assert numerical_rank(np.zeros((3, 4))) == 0

    def test_low_rank(self):
        M = np.outer([1.0, 2.0, 3.0], [1.0, -1.0]) + np.outer([0.0, 1.0, 0.0], [2.0, 2.0])
        assert numerical_rank(M) == 2


class TestHasConverged:
    def test_relative(self):
        assert has_converged(100.0, 100.0 - 1e-9, 1e-10)
        assert not has_converged(100.0, 99.0, 1e-10)

    def test_floor(self):
        assert not has_converged(1e-30, 0.0, 1e-10)
        assert has_converged(1e-30, 0.0, 1e-10, floor=1e-15)


class TestTypingCompat:
    @pytest.mark.parametrize("name", ["cast", "Literal"])
    def test_unused_symbols_are_gone(self, name):
        assert name not in dir(_t)
        with pytest.raises(AttributeError):
            getattr(_t, name)

    def test_lazy_symbols_resolve(self):
        assert _t.Optional is not None
        assert "FloatArray" in dir(_t)
