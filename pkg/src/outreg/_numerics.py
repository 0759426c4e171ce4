"""Shared numeric helpers: input validation, rank-tolerant solves, ranks, and convergence tests."""

from __future__ import annotations

import numpy as np

from . import _typing_compat as _t
from .errors import DimensionError, InputDomainError


__all__ = (
    "PINV_RCOND",
    "EXACT_FIT_RTOL",
    "as_matrix",
    "as_vector",
    "check_same_shape",
    "pinv_solve",
    "numerical_rank",
    "has_converged",
)


#: Relative singular-value cutoff for every pseudo-inverse in the package.
PINV_RCOND = 1e-12

#: Residuals below this fraction of the largest data entry count as an exact fit.
EXACT_FIT_RTOL = 1e-12


def as_matrix(value: _t.ArrayLike, name: str = "matrix") -> _t.FloatArray:
    """Convert `value` to a finite, two-dimensional float64 array.

    Raises
    ------
    InputDomainError
        If the value is not two-dimensional or has non-finite entries.
    """

    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 2:
        msg = f"{name} must be two-dimensional, got shape {arr.shape}."
        raise InputDomainError(msg)
    if not np.all(np.isfinite(arr)):
        msg = f"{name} has non-finite entries."
        raise InputDomainError(msg)
    return arr


def as_vector(value: _t.ArrayLike, name: str = "vector") -> _t.FloatArray:
    """Convert `value` to a finite, one-dimensional float64 array. Row and column matrices are flattened."""

    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1:
        msg = f"{name} must be one-dimensional, got shape {arr.shape}."
        raise InputDomainError(msg)
    if not np.all(np.isfinite(arr)):
        msg = f"{name} has non-finite entries."
        raise InputDomainError(msg)
    return arr


def check_same_shape(first: _t.FloatArray, second: _t.FloatArray, names: tuple[str, str]) -> None:
    if first.shape != second.shape:
        msg = f"{names[0]} has shape {first.shape} but {names[1]} has shape {second.shape}."
        raise DimensionError(msg)


def pinv_solve(gram: _t.FloatArray, rhs: _t.FloatArray) -> _t.FloatArray:
    """Solve ``gram @ x = rhs`` for a symmetric positive semi-definite `gram`.

    The pseudo-inverse drops singular values below ``PINV_RCOND * sigma_max``, so rank-deficient systems return the
    minimum-norm solution instead of failing.
    """

    return np.linalg.pinv(gram, rcond=PINV_RCOND, hermitian=True) @ rhs


def numerical_rank(matrix: _t.FloatArray, rtol: float = 1e-10) -> int:
    """Count the singular values above ``rtol * sigma_max``. The zero matrix has rank 0."""

    if matrix.size == 0:
        return 0
    sigma = np.linalg.svd(matrix, compute_uv=False)
    if sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rtol * sigma[0]))


def has_converged(previous: float, current: float, tol: float, floor: float = 0.0) -> bool:
    """Relative objective-change test.

    The change is measured against ``max(|previous|, floor)``; the floor keeps objectives that are zero up to rounding
    from looking unconverged.
    """

    scale = max(abs(previous), floor)
    return abs(previous - current) <= tol * scale
