"""The outlier-regularization operator, its proximal (variational) form, and a brute-force oracle for both.

An entry is an outlier when its measurement ``y`` lies farther than the tolerance ``delta`` from its prediction ``f``.
Outliers are pulled back onto the tolerance band, ``f + delta * sign(y - f)``; everything else passes through
untouched. The same map is the minimizer of ``|y - z|_1 + (1 / 2 delta) |z - f|^2``, which is what lets the solvers in
this package treat regularization as an exact block-minimization step.
"""

from __future__ import annotations

import math

import numpy as np

from . import _typing_compat as _t
from ._numerics import check_same_shape
from .errors import InputDomainError


__all__ = (
    "Tolerance",
    "RegularizationOutcome",
    "regularize_scalar",
    "soft_threshold",
    "soft_threshold_array",
    "regularize_matrix",
    "variational_solve",
    "objective_prox",
    "brute_force_prox",
)


class Tolerance:
    """The outlier threshold.

    Parameters
    ----------
    delta: float
        The tolerance, in the same units as the signal being regularized. Must be finite and positive.

    Attributes
    ----------
    delta: float
        The tolerance.
    """

    __slots__ = ("delta",)

    delta: float

    def __init__(self, delta: float):
        delta = float(delta)
        if not (math.isfinite(delta) and delta > 0.0):
            msg = f"Tolerance must be finite and positive, got {delta!r}."
            raise InputDomainError(msg)
        self.delta = delta

    def __repr__(self):
        return f"{self.__class__.__name__}({self.delta!r})"

    def __float__(self):
        return self.delta

    def __eq__(self, other: object):
        if isinstance(other, Tolerance):
            return self.delta == other.delta
        return NotImplemented

    def __hash__(self):
        return hash(self.delta)

    @classmethod
    def coerce(cls, value: _t.Union[Tolerance, float], /) -> Tolerance:
        """Return `value` unchanged if it is already a tolerance; otherwise validate and wrap it."""

        if isinstance(value, Tolerance):
            return value
        return cls(value)


class RegularizationOutcome:
    """The result of regularizing a matrix against its prediction.

    Attributes
    ----------
    regularized: FloatArray
        The regularized data, Z.
    outlier_mask: BoolArray
        True where the entry was moved onto the tolerance band, i.e. where the regularized value differs from the
        data. An entry lying exactly on the band edge is left alone and not counted.
    num_outliers: int
        The number of true entries in `outlier_mask`.
    """

    __slots__ = ("regularized", "outlier_mask", "num_outliers")

    regularized: _t.FloatArray
    outlier_mask: _t.BoolArray
    num_outliers: int

    def __init__(self, regularized: _t.FloatArray, outlier_mask: _t.BoolArray):
        self.regularized = regularized
        self.outlier_mask = outlier_mask
        self.num_outliers = int(np.count_nonzero(outlier_mask))

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(shape={self.regularized.shape!r}, num_outliers={self.num_outliers!r})"
        )


def _finite_array(value: _t.ArrayLike, name: str) -> _t.FloatArray:
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        msg = f"{name} has non-finite entries."
        raise InputDomainError(msg)
    return arr


def _check_finite_scalar(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        msg = f"{name} must be finite, got {value!r}."
        raise InputDomainError(msg)
    return value


def regularize_scalar(y: float, f: float, delta: _t.Union[Tolerance, float]) -> float:
    """Regularize one measurement `y` against its prediction `f`.

    Returns `y` when ``|y - f| <= delta`` and ``f + delta * sign(y - f)`` otherwise. A residual exactly equal to the
    tolerance is not an outlier.
    """

    y = _check_finite_scalar(y, "y")
    f = _check_finite_scalar(f, "f")
    d = Tolerance.coerce(delta).delta

    residual = y - f
    if abs(residual) <= d:
        return y
    return f + d * math.copysign(1.0, residual)


def soft_threshold(t: float, delta: _t.Union[Tolerance, float]) -> float:
    """The proximal operator of ``delta * |.|``: ``sign(t) * max(|t| - delta, 0)``, with ``sign(0) = 0``."""

    t = _check_finite_scalar(t, "t")
    d = Tolerance.coerce(delta).delta

    magnitude = abs(t) - d
    if magnitude <= 0.0:
        return 0.0
    return math.copysign(magnitude, t)


def soft_threshold_array(values: _t.ArrayLike, threshold: float) -> _t.FloatArray:
    """Entry-wise soft thresholding of an array. `threshold` may be zero here (the identity)."""

    arr = _finite_array(values, "values")
    return np.sign(arr) * np.maximum(np.abs(arr) - threshold, 0.0)


def regularize_matrix(
    X: _t.ArrayLike,
    F: _t.ArrayLike,
    delta: _t.Union[Tolerance, float],
) -> RegularizationOutcome:
    """Apply `regularize_scalar` entry by entry.

    Parameters
    ----------
    X: ArrayLike
        The measurements. Any shape, as long as it matches `F`.
    F: ArrayLike
        The predictions.
    delta: Tolerance | float
        The tolerance.

    Returns
    -------
    RegularizationOutcome
        The regularized data and the outlier mask.

    Raises
    ------
    DimensionError
        If `X` and `F` differ in shape.
    InputDomainError
        If either has non-finite entries.

    Notes
    -----
    An entry already sitting on the tolerance band (bit-identical to ``F + delta * sign(X - F)``) is left alone and not
    counted, even if rounding puts its residual a hair above `delta`. That keeps the operator idempotent.
    """

    X_arr = _finite_array(X, "X")
    F_arr = _finite_array(F, "F")
    check_same_shape(X_arr, F_arr, ("X", "F"))
    d = Tolerance.coerce(delta).delta

    residual = X_arr - F_arr
    clamped = F_arr + d * np.sign(residual)
    mask = (np.abs(residual) > d) & (clamped != X_arr)
    return RegularizationOutcome(np.where(mask, clamped, X_arr), mask)


def variational_solve(
    y: _t.ArrayLike,
    f: _t.ArrayLike,
    delta: _t.Union[Tolerance, float],
) -> _t.FloatArray:
    """Solve ``argmin_z |y - z|_1 + (1 / 2 delta) |z - f|^2`` in closed form.

    With ``u = z - y`` the problem is the Lasso proximal step on ``f - y``, so ``u* = soft_threshold(f - y, delta)``
    and ``z* = y + u*``. Wherever ``u*`` is non-zero this simplifies to ``f - delta * sign(f - y)``; that form is
    used so the result is bit-identical to `regularize_matrix`.
    """

    y_arr = _finite_array(y, "y")
    f_arr = _finite_array(f, "f")
    check_same_shape(y_arr, f_arr, ("y", "f"))
    d = Tolerance.coerce(delta).delta

    gap = f_arr - y_arr
    shrunk = soft_threshold_array(gap, d)
    return np.where(shrunk != 0.0, f_arr - np.sign(gap) * d, y_arr)


def objective_prox(
    y: _t.ArrayLike,
    z: _t.ArrayLike,
    f: _t.ArrayLike,
    delta: _t.Union[Tolerance, float],
) -> float:
    """Evaluate ``sum |y - z| + (1 / 2 delta) sum (z - f)^2`` for equal-shape arrays."""

    y_arr = _finite_array(y, "y")
    z_arr = _finite_array(z, "z")
    f_arr = _finite_array(f, "f")
    check_same_shape(y_arr, z_arr, ("y", "z"))
    check_same_shape(z_arr, f_arr, ("z", "f"))
    d = Tolerance.coerce(delta).delta

    return float(np.sum(np.abs(y_arr - z_arr)) + np.sum((z_arr - f_arr) ** 2) / (2.0 * d))


def brute_force_prox(
    y: _t.ArrayLike,
    f: _t.ArrayLike,
    delta: _t.Union[Tolerance, float],
    step: float = 1e-4,
) -> _t.FloatArray:
    """Grid-search oracle for `variational_solve`.

    Each coordinate is minimized independently over an evenly spaced grid covering
    ``[min(y_i, f_i) - 1, max(y_i, f_i) + 1]``. Meant for checking the closed form, not for production use.
    """

    y_arr = _finite_array(y, "y")
    f_arr = _finite_array(f, "f")
    check_same_shape(y_arr, f_arr, ("y", "f"))
    d = Tolerance.coerce(delta).delta

    out = np.empty_like(y_arr)
    for idx, (y_i, f_i) in enumerate(zip(y_arr.flat, f_arr.flat)):
        lo = min(y_i, f_i) - 1.0
        hi = max(y_i, f_i) + 1.0
        grid = lo + step * np.arange(int(np.ceil((hi - lo) / step)) + 1)
        values = np.abs(y_i - grid) + (grid - f_i) ** 2 / (2.0 * d)
        out.flat[idx] = grid[np.argmin(values)]
    return out
