"""Outlier-regularized linear regression.

The prediction ``f = a^T X + b`` and the regularized targets are learned together: fit a least-squares line to the
current targets, then pull every target that lies farther than ``delta`` from the line back onto the tolerance band,
and repeat. Each half-step exactly minimizes the continuous objective ``|y - z|_1 + (1 / 2 delta) |z - f|^2`` over
its own block, so the objective never increases. Letting ``delta`` shrink towards zero turns the fit into L1
regression.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from . import _typing_compat as _t
from ._numerics import EXACT_FIT_RTOL, as_matrix, as_vector, has_converged, pinv_solve
from .errors import ConvergenceWarning, DimensionError, InputDomainError
from .proxreg import Tolerance, objective_prox, regularize_matrix


__all__ = (
    "DEFAULT_L1_SCHEDULE",
    "OrlrConfig",
    "OrlrStep",
    "OrlrResult",
    "OrlrSolver",
    "predict",
    "ols_fit",
    "objective_orlr",
    "fit_orlr",
    "l1_regression_path",
    "l1_regression",
)


log = logging.getLogger(__name__)

#: Multipliers of the initial median absolute residual used when no continuation schedule is given.
DEFAULT_L1_SCHEDULE = (1.0, 0.1, 0.01, 0.001)


class OrlrConfig:
    """Settings for `fit_orlr`.

    Parameters
    ----------
    delta: Tolerance | float
        The outlier tolerance, in the units of the targets.
    max_iters: int, default=200
        The cap on outer (fit, regularize) iterations.
    tol: float, default=1e-10
        The stopping threshold on the relative change of the objective between iterations.
    record_trace: bool, default=True
        Whether to keep the per-iteration objective values.
    """

    __slots__ = ("delta", "max_iters", "tol", "record_trace")

    delta: Tolerance
    max_iters: int
    tol: float
    record_trace: bool

    def __init__(
        self,
        delta: _t.Union[Tolerance, float],
        max_iters: int = 200,
        tol: float = 1e-10,
        record_trace: bool = True,
    ):
        if max_iters < 1:
            msg = f"max_iters must be at least 1, got {max_iters!r}."
            raise InputDomainError(msg)
        if not tol > 0.0:
            msg = f"tol must be positive, got {tol!r}."
            raise InputDomainError(msg)

        self.delta = Tolerance.coerce(delta)
        self.max_iters = int(max_iters)
        self.tol = float(tol)
        self.record_trace = record_trace

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(delta={self.delta.delta!r}, max_iters={self.max_iters!r}, tol={self.tol!r}, "
            f"record_trace={self.record_trace!r})"
        )

    def with_delta(self, delta: _t.Union[Tolerance, float]) -> OrlrConfig:
        """Return a copy of this configuration with a different tolerance."""

        return OrlrConfig(delta, self.max_iters, self.tol, self.record_trace)

    def to_dict(self) -> dict[str, _t.Any]:
        return {"delta": self.delta.delta, "max_iters": self.max_iters, "tol": self.tol}


class OrlrStep:
    """The state after one outer iteration of `OrlrSolver`."""

    __slots__ = ("iteration", "a", "b", "objective", "num_outliers")

    def __init__(self, iteration: int, a: _t.FloatArray, b: float, objective: float, num_outliers: int):
        self.iteration = iteration
        self.a = a
        self.b = b
        self.objective = objective
        self.num_outliers = num_outliers

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(iteration={self.iteration!r}, b={self.b!r}, objective={self.objective!r}, "
            f"num_outliers={self.num_outliers!r})"
        )


class OrlrResult:
    """A fitted outlier-regularized regression.

    Attributes
    ----------
    a: FloatArray
        The slope, one entry per row of the design.
    b: float
        The intercept.
    y_tilde: FloatArray
        The regularized targets, consistent with the final prediction.
    fitted: FloatArray
        The final prediction ``a^T X + b``.
    outlier_mask: BoolArray
        True where the target was pulled onto the tolerance band.
    num_outliers: int
        The number of regularized targets.
    objective_trace: list[float]
        The objective after every iteration. Empty if tracing was turned off.
    iterations: int
        The number of outer iterations run.
    converged: bool
        Whether the relative objective change fell below the tolerance.
    """

    __slots__ = (
        "a",
        "b",
        "y_tilde",
        "fitted",
        "outlier_mask",
        "num_outliers",
        "objective_trace",
        "iterations",
        "converged",
    )

    def __init__(  # noqa: PLR0913
        self,
        a: _t.FloatArray,
        b: float,
        y_tilde: _t.FloatArray,
        fitted: _t.FloatArray,
        outlier_mask: _t.BoolArray,
        objective_trace: list[float],
        iterations: int,
        converged: bool,
    ):
        self.a = a
        self.b = b
        self.y_tilde = y_tilde
        self.fitted = fitted
        self.outlier_mask = outlier_mask
        self.num_outliers = int(np.count_nonzero(outlier_mask))
        self.objective_trace = objective_trace
        self.iterations = iterations
        self.converged = converged

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(a={self.a!r}, b={self.b!r}, num_outliers={self.num_outliers!r}, "
            f"iterations={self.iterations!r}, converged={self.converged!r})"
        )


def _check_design(X: _t.FloatArray, y: _t.FloatArray) -> None:
    if X.shape[1] != y.shape[0]:
        msg = f"The design has {X.shape[1]} columns but there are {y.shape[0]} targets."
        raise DimensionError(msg)


def predict(X: _t.ArrayLike, a: _t.ArrayLike, b: float) -> _t.FloatArray:
    """Evaluate ``a^T X + b`` for a ``p x n`` design."""

    X_arr = as_matrix(X, "X")
    a_arr = np.asarray(a, dtype=np.float64).reshape(-1)
    if a_arr.shape[0] != X_arr.shape[0]:
        msg = f"The slope has {a_arr.shape[0]} entries but the design has {X_arr.shape[0]} rows."
        raise DimensionError(msg)
    return a_arr @ X_arr + b


def ols_fit(X: _t.ArrayLike, t: _t.ArrayLike) -> tuple[_t.FloatArray, float]:
    """Least-squares fit of ``t ~ a^T X + b``.

    The intercept comes from augmenting the design with a row of ones. The normal equations of the augmented design
    are solved through a pseudo-inverse, so a rank-deficient design (including ``n < p + 1``) yields the minimum-norm
    solution rather than an error.

    Parameters
    ----------
    X: ArrayLike
        The ``p x n`` design; each column is one sample. ``p`` may be zero for a pure location fit.
    t: ArrayLike
        The ``n`` targets.

    Returns
    -------
    tuple[FloatArray, float]
        The slope ``a`` and the intercept ``b``.
    """

    X_arr = as_matrix(X, "X")
    t_arr = as_vector(t, "t")
    _check_design(X_arr, t_arr)

    design = np.vstack((X_arr, np.ones((1, X_arr.shape[1]))))
    coef = pinv_solve(design @ design.T, design @ t_arr)
    return coef[:-1].copy(), float(coef[-1])


def objective_orlr(
    y: _t.ArrayLike,
    z: _t.ArrayLike,
    a: _t.ArrayLike,
    b: float,
    X: _t.ArrayLike,
    delta: _t.Union[Tolerance, float],
) -> float:
    """Evaluate ``|y - z|_1 + (1 / 2 delta) |z - (a^T X + b)|^2``."""

    y_arr = as_vector(y, "y")
    z_arr = as_vector(z, "z")
    fitted = predict(X, a, b)
    if fitted.shape != y_arr.shape:
        msg = f"The prediction has {fitted.shape[0]} entries but there are {y_arr.shape[0]} targets."
        raise DimensionError(msg)
    return objective_prox(y_arr, z_arr, fitted, delta)


class OrlrSolver:
    """Iterator over the outer iterations of outlier-regularized regression.

    Each call to `next` fits the line to the current regularized targets and then regularizes the targets against
    the new line. Iteration stops once the objective settles or the iteration cap is hit.

    Parameters
    ----------
    X: ArrayLike
        The ``p x n`` design.
    y: ArrayLike
        The ``n`` measured targets.
    config: OrlrConfig
        The solver settings.
    init: tuple[ArrayLike, float], optional
        A starting ``(a, b)``. The targets are regularized against it before the first fit. If omitted, the targets
        start as the measurements.

    Attributes
    ----------
    X: FloatArray
        The design.
    y: FloatArray
        The measured targets.
    config: OrlrConfig
        The solver settings.
    y_tilde: FloatArray
        The current regularized targets.
    a: FloatArray
        The current slope.
    b: float
        The current intercept.
    outlier_mask: BoolArray
        The current outlier mask.
    iteration: int
        The number of completed iterations.
    objective: float
        The objective after the latest iteration.
    converged: bool
        Whether the stopping criterion has been met.
    """

    X: _t.FloatArray
    y: _t.FloatArray
    config: OrlrConfig
    y_tilde: _t.FloatArray
    a: _t.FloatArray
    b: float
    outlier_mask: _t.BoolArray
    iteration: int
    objective: float
    converged: bool

    def __init__(
        self,
        X: _t.ArrayLike,
        y: _t.ArrayLike,
        config: OrlrConfig,
        init: _t.Optional[tuple[_t.ArrayLike, float]] = None,
    ):
        self.X = as_matrix(X, "X")
        self.y = as_vector(y, "y")
        _check_design(self.X, self.y)
        self.config = config

        self.a = np.zeros(self.X.shape[0])
        self.b = 0.0
        if init is None:
            self.y_tilde = self.y.copy()
            self.outlier_mask = np.zeros(self.y.shape, dtype=bool)
        else:
            outcome = regularize_matrix(self.y, predict(self.X, init[0], init[1]), config.delta)
            self.y_tilde = outcome.regularized
            self.outlier_mask = outcome.outlier_mask

        self.iteration = 0
        self.objective = float("nan")
        self.converged = False

        #: Objective changes below this absolute size count as rounding noise.
        self._floor: float = float(np.finfo(np.float64).eps * np.sum(np.abs(self.y)))

    def __repr__(self):
        return f"{self.__class__.__name__}(shape={self.X.shape!r}, iteration={self.iteration!r})"

    def __iter__(self) -> _t.Self:
        return self

    def __next__(self) -> OrlrStep:
        if self.converged or self.iteration >= self.config.max_iters:
            raise StopIteration

        delta = self.config.delta

        # Fit the line to the current targets.
        self.a, self.b = ols_fit(self.X, self.y_tilde)
        fitted = self.a @ self.X + self.b

        if self.iteration == 0:
            previous = objective_prox(self.y, self.y_tilde, fitted, delta)
        else:
            previous = self.objective

        # Regularize the targets against the new line.
        outcome = regularize_matrix(self.y, fitted, delta)
        self.y_tilde = outcome.regularized
        self.outlier_mask = outcome.outlier_mask
        self.objective = objective_prox(self.y, self.y_tilde, fitted, delta)

        self.iteration += 1
        self.converged = has_converged(previous, self.objective, self.config.tol, self._floor)

        log.debug(
            "orlr iteration %d: objective=%.12g outliers=%d",
            self.iteration,
            self.objective,
            outcome.num_outliers,
        )
        return OrlrStep(self.iteration, self.a, self.b, self.objective, outcome.num_outliers)


def fit_orlr(
    X: _t.ArrayLike,
    y: _t.ArrayLike,
    config: OrlrConfig,
    init: _t.Optional[tuple[_t.ArrayLike, float]] = None,
) -> OrlrResult:
    """Run outlier-regularized regression to convergence.

    Parameters
    ----------
    X: ArrayLike
        The ``p x n`` design.
    y: ArrayLike
        The ``n`` measured targets.
    config: OrlrConfig
        The solver settings.
    init: tuple[ArrayLike, float], optional
        A warm start ``(a, b)``.

    Returns
    -------
    OrlrResult
        The fit. ``converged`` is False (and a `ConvergenceWarning` is emitted) if the iteration cap was reached first.
    """

    solver = OrlrSolver(X, y, config, init)
    trace = [step.objective for step in solver]
    if not config.record_trace:
        trace = []

    if not solver.converged:
        warnings.warn(
            f"Outlier-regularized regression stopped after {solver.iteration} iterations without converging.",
            ConvergenceWarning,
            stacklevel=2,
        )

    fitted = solver.a @ solver.X + solver.b
    return OrlrResult(
        solver.a,
        solver.b,
        solver.y_tilde,
        fitted,
        solver.outlier_mask,
        trace,
        solver.iteration,
        solver.converged,
    )


def _validate_schedule(schedule: _t.ArrayLike) -> list[float]:
    values = [float(d) for d in np.asarray(schedule, dtype=np.float64).reshape(-1)]
    if not values:
        msg = "The tolerance schedule is empty."
        raise InputDomainError(msg)
    if not all(np.isfinite(d) and d > 0.0 for d in values):
        msg = "Every tolerance in the schedule must be finite and positive."
        raise InputDomainError(msg)
    if any(later >= earlier for earlier, later in zip(values, values[1:])):
        msg = "The tolerance schedule must be strictly decreasing."
        raise InputDomainError(msg)
    return values


def l1_regression_path(
    X: _t.ArrayLike,
    y: _t.ArrayLike,
    schedule: _t.Optional[_t.ArrayLike] = None,
    max_iters: int = 200,
    tol: float = 1e-10,
) -> list[OrlrResult]:
    """Follow outlier-regularized regression down a decreasing tolerance schedule.

    Every stage is warm-started from the previous stage's ``(a, b)``; its regularized targets are recomputed at the
    new tolerance. The default schedule is `DEFAULT_L1_SCHEDULE` times the median absolute residual of the plain
    least-squares fit. When the data already lie exactly on a line the least-squares fit is returned as the only
    stage.

    Raises
    ------
    InputDomainError
        If an explicit schedule is empty, non-positive, or not strictly decreasing.
    """

    X_arr = as_matrix(X, "X")
    y_arr = as_vector(y, "y")
    _check_design(X_arr, y_arr)

    if schedule is None:
        a0, b0 = ols_fit(X_arr, y_arr)
        residual = np.abs(y_arr - (a0 @ X_arr + b0))
        scale = float(np.median(residual)) or float(np.mean(residual))
        if scale <= EXACT_FIT_RTOL * float(np.max(np.abs(y_arr), initial=0.0)):
            fitted = a0 @ X_arr + b0
            return [OrlrResult(a0, b0, y_arr.copy(), fitted, np.zeros(y_arr.shape, dtype=bool), [], 0, True)]
        deltas = [scale * factor for factor in DEFAULT_L1_SCHEDULE]
    else:
        deltas = _validate_schedule(schedule)

    path: list[OrlrResult] = []
    init: _t.Optional[tuple[_t.ArrayLike, float]] = None
    for delta in deltas:
        result = fit_orlr(X_arr, y_arr, OrlrConfig(delta, max_iters=max_iters, tol=tol), init)
        path.append(result)
        init = (result.a, result.b)
        log.debug("l1 regression stage delta=%.6g: b=%.12g iterations=%d", delta, result.b, result.iterations)
    return path


def l1_regression(
    X: _t.ArrayLike,
    y: _t.ArrayLike,
    schedule: _t.Optional[_t.ArrayLike] = None,
    max_iters: int = 200,
    tol: float = 1e-10,
) -> tuple[_t.FloatArray, float]:
    """Approximate ``argmin_{a, b} |y - (a^T X + b)|_1`` as the small-tolerance limit of `fit_orlr`.

    See `l1_regression_path` for the schedule handling.
    """

    final = l1_regression_path(X, y, schedule, max_iters, tol)[-1]
    return final.a, final.b
