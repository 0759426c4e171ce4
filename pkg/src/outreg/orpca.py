"""Outlier-regularized PCA.

The data matrix ``X`` is approximated by a rank-``k`` product ``F = U V`` while every entry lying farther than
``delta`` from ``F`` is pulled onto the tolerance band. The regularized matrix ``Z`` is the main output: it sits close
to the rank-``k`` subspace but keeps small higher-rank components. The two blocks alternate:

- regularize ``Z`` against ``F`` (exact minimization over ``Z``), and
- refit ``U`` and ``V`` to ``Z`` by alternating least squares (exact minimization over each factor),

so the objective ``|X - Z|_1 + (1 / 2 delta) |Z - U V|_F^2`` never increases. As ``delta`` goes to zero the problem
becomes fixed-rank L1 PCA, ``min |X - U V|_1``.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from . import _typing_compat as _t
from ._numerics import EXACT_FIT_RTOL, as_matrix, has_converged, pinv_solve
from .errors import ConvergenceWarning, DimensionError, InputDomainError
from .proxreg import Tolerance, objective_prox, regularize_matrix


__all__ = (
    "OrpcaConfig",
    "OrpcaStep",
    "OrpcaResult",
    "OrpcaSolver",
    "pca_init",
    "update_factors",
    "objective_orpca",
    "fit_orpca",
    "default_schedule",
    "orpca_path",
    "l1_pca_path",
    "l1_pca",
    "l1_polish",
)


log = logging.getLogger(__name__)


class OrpcaConfig:
    """Settings for `fit_orpca`.

    Parameters
    ----------
    rank_k: int
        The rank of the factorization ``U V``.
    delta: Tolerance | float
        The outlier tolerance. 0.003 is a good value for data scaled to ``[0, 1]``.
    max_iters: int, default=500
        The cap on outer iterations.
    tol: float, default=1e-10
        The stopping threshold on the relative change of the objective between iterations.
    inner_als_sweeps: int, default=1
        How many (U, V) least-squares sweeps to run per outer iteration.
    record_trace: bool, default=True
        Whether to keep the per-iteration objective values.
    seed: int, optional
        Only used for random initialization, which the solvers here never do by default.
    center: bool, default=False
        Whether to subtract the row means before solving. The model ``F = U V`` has no mean term, so this is off unless
        asked for.
    """

    __slots__ = ("rank_k", "delta", "max_iters", "tol", "inner_als_sweeps", "record_trace", "seed", "center")

    rank_k: int
    delta: Tolerance
    max_iters: int
    tol: float
    inner_als_sweeps: int
    record_trace: bool
    seed: _t.Optional[int]
    center: bool

    def __init__(  # noqa: PLR0913
        self,
        rank_k: int,
        delta: _t.Union[Tolerance, float],
        max_iters: int = 500,
        tol: float = 1e-10,
        inner_als_sweeps: int = 1,
        record_trace: bool = True,
        seed: _t.Optional[int] = None,
        center: bool = False,
    ):
        for name, value in (("rank_k", rank_k), ("max_iters", max_iters), ("inner_als_sweeps", inner_als_sweeps)):
            if value < 1:
                msg = f"{name} must be at least 1, got {value!r}."
                raise InputDomainError(msg)
        if not tol > 0.0:
            msg = f"tol must be positive, got {tol!r}."
            raise InputDomainError(msg)

        self.rank_k = int(rank_k)
        self.delta = Tolerance.coerce(delta)
        self.max_iters = int(max_iters)
        self.tol = float(tol)
        self.inner_als_sweeps = int(inner_als_sweeps)
        self.record_trace = record_trace
        self.seed = seed
        self.center = center

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(rank_k={self.rank_k!r}, delta={self.delta.delta!r}, "
            f"max_iters={self.max_iters!r}, tol={self.tol!r}, inner_als_sweeps={self.inner_als_sweeps!r}, "
            f"center={self.center!r})"
        )

    def with_delta(self, delta: _t.Union[Tolerance, float]) -> OrpcaConfig:
        """Return a copy of this configuration with a different tolerance."""

        return OrpcaConfig(
            self.rank_k,
            delta,
            self.max_iters,
            self.tol,
            self.inner_als_sweeps,
            self.record_trace,
            self.seed,
            self.center,
        )

    def to_dict(self) -> dict[str, _t.Any]:
        return {
            "rank_k": self.rank_k,
            "delta": self.delta.delta,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "inner_als_sweeps": self.inner_als_sweeps,
            "seed": self.seed,
            "center": self.center,
        }


class OrpcaStep:
    """The state after one outer iteration of `OrpcaSolver`."""

    __slots__ = ("iteration", "objective", "num_outliers")

    def __init__(self, iteration: int, objective: float, num_outliers: int):
        self.iteration = iteration
        self.objective = objective
        self.num_outliers = num_outliers

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(iteration={self.iteration!r}, objective={self.objective!r}, "
            f"num_outliers={self.num_outliers!r})"
        )


class OrpcaResult:
    """A fitted outlier-regularized PCA.

    Attributes
    ----------
    Z: FloatArray
        The regularized data, ``p x n``. Consistent with the final factors.
    U: FloatArray
        The ``p x k`` left factor.
    V: FloatArray
        The ``k x n`` right factor.
    fitted: FloatArray
        The low-rank prediction ``U V`` (plus the row means when centering).
    outlier_mask: BoolArray
        True where the entry of ``X`` was pulled onto the tolerance band.
    outlier_fraction: float
        The share of regularized entries.
    objective_trace: list[float]
        The objective after every iteration. Empty if tracing was turned off.
    iterations: int
        The number of outer iterations run.
    converged: bool
        Whether the relative objective change fell below the tolerance.
    mean: FloatArray
        The ``p x 1`` row means removed before solving. Zero unless centering was requested.
    delta: float
        The tolerance the result was computed at.
    """

    __slots__ = (
        "Z",
        "U",
        "V",
        "fitted",
        "outlier_mask",
        "outlier_fraction",
        "objective_trace",
        "iterations",
        "converged",
        "mean",
        "delta",
    )

    def __init__(  # noqa: PLR0913
        self,
        Z: _t.FloatArray,
        U: _t.FloatArray,
        V: _t.FloatArray,
        outlier_mask: _t.BoolArray,
        objective_trace: list[float],
        iterations: int,
        converged: bool,
        mean: _t.FloatArray,
        delta: float,
    ):
        self.Z = Z
        self.U = U
        self.V = V
        self.fitted = U @ V + mean
        self.outlier_mask = outlier_mask
        self.outlier_fraction = float(np.mean(outlier_mask)) if outlier_mask.size else 0.0
        self.objective_trace = objective_trace
        self.iterations = iterations
        self.converged = converged
        self.mean = mean
        self.delta = delta

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(shape={self.Z.shape!r}, rank_k={self.U.shape[1]!r}, delta={self.delta!r}, "
            f"outlier_fraction={self.outlier_fraction!r}, iterations={self.iterations!r}, "
            f"converged={self.converged!r})"
        )


def _check_rank(shape: tuple[int, ...], k: int) -> None:
    if not 1 <= k <= min(shape):
        msg = f"Rank {k} is out of range for a {shape[0]} x {shape[1]} matrix."
        raise InputDomainError(msg)


def pca_init(X: _t.ArrayLike, k: int) -> tuple[_t.FloatArray, _t.FloatArray]:
    """Truncated-SVD factors: ``U0 = A_k Sigma_k`` and ``V0 = B_k^T``. The data are not centered."""

    X_arr = as_matrix(X, "X")
    _check_rank(X_arr.shape, k)

    left, sigma, right_t = np.linalg.svd(X_arr, full_matrices=False)
    return left[:, :k] * sigma[:k], right_t[:k].copy()


def update_factors(
    Z: _t.ArrayLike,
    U: _t.ArrayLike,
    V: _t.ArrayLike,
    sweeps: int = 1,
) -> tuple[_t.FloatArray, _t.FloatArray]:
    """Alternating least-squares sweeps for ``min |Z - U V|_F^2``.

    Each sweep sets ``U = Z V^T (V V^T)^+`` and then ``V = (U^T U)^+ U^T Z``. Both are exact minimizers of their
    block, so the residual never grows. Collapsed factors are handled by the pseudo-inverse.
    """

    Z_arr = as_matrix(Z, "Z")
    U_arr = as_matrix(U, "U")
    V_arr = as_matrix(V, "V")
    if U_arr.shape[1] != V_arr.shape[0] or (U_arr.shape[0], V_arr.shape[1]) != Z_arr.shape:
        msg = f"Factors of shapes {U_arr.shape} and {V_arr.shape} do not match data of shape {Z_arr.shape}."
        raise DimensionError(msg)

    for _ in range(sweeps):
        U_arr = pinv_solve(V_arr @ V_arr.T, V_arr @ Z_arr.T).T
        V_arr = pinv_solve(U_arr.T @ U_arr, U_arr.T @ Z_arr)
    return U_arr, V_arr


def objective_orpca(
    X: _t.ArrayLike,
    Z: _t.ArrayLike,
    U: _t.ArrayLike,
    V: _t.ArrayLike,
    delta: _t.Union[Tolerance, float],
) -> float:
    """Evaluate ``|X - Z|_1 + (1 / 2 delta) |Z - U V|_F^2``."""

    return objective_prox(X, Z, as_matrix(U, "U") @ as_matrix(V, "V"), delta)


class OrpcaSolver:
    """Iterator over the outer iterations of outlier-regularized PCA.

    The initial regularization against the starting factors happens on construction. Each call to `next` then refits
    the factors to ``Z`` and regularizes ``Z`` against the new prediction, so ``Z`` always matches the current
    factors.

    Parameters
    ----------
    X: ArrayLike
        The ``p x n`` data.
    config: OrpcaConfig
        The solver settings.
    init: tuple[ArrayLike, ArrayLike], optional
        Starting factors ``(U, V)``. Defaults to `pca_init`.

    Attributes
    ----------
    X: FloatArray
        The data being fitted, after centering if requested.
    config: OrpcaConfig
        The solver settings.
    mean: FloatArray
        The row means removed from the data.
    U: FloatArray
        The current left factor.
    V: FloatArray
        The current right factor.
    Z: FloatArray
        The current regularized data.
    outlier_mask: BoolArray
        The current outlier mask.
    iteration: int
        The number of completed iterations.
    objective: float
        The current objective.
    converged: bool
        Whether the stopping criterion has been met.
    """

    X: _t.FloatArray
    config: OrpcaConfig
    mean: _t.FloatArray
    U: _t.FloatArray
    V: _t.FloatArray
    Z: _t.FloatArray
    outlier_mask: _t.BoolArray
    iteration: int
    objective: float
    converged: bool

    def __init__(
        self,
        X: _t.ArrayLike,
        config: OrpcaConfig,
        init: _t.Optional[tuple[_t.ArrayLike, _t.ArrayLike]] = None,
    ):
        data = as_matrix(X, "X")
        _check_rank(data.shape, config.rank_k)
        self.config = config

        if config.center:
            self.mean = data.mean(axis=1, keepdims=True)
        else:
            self.mean = np.zeros((data.shape[0], 1))
        self.X = data - self.mean

        if init is None:
            self.U, self.V = pca_init(self.X, config.rank_k)
        else:
            self.U = as_matrix(init[0], "U").copy()
            self.V = as_matrix(init[1], "V").copy()
            if self.U.shape != (data.shape[0], config.rank_k) or self.V.shape != (config.rank_k, data.shape[1]):
                msg = f"Initial factors of shapes {self.U.shape} and {self.V.shape} do not match the configuration."
                raise DimensionError(msg)

        outcome = regularize_matrix(self.X, self.U @ self.V, config.delta)
        self.Z = outcome.regularized
        self.outlier_mask = outcome.outlier_mask
        self.objective = objective_prox(self.X, self.Z, self.U @ self.V, config.delta)

        self.iteration = 0
        self.converged = False

        #: Objective changes below this absolute size count as rounding noise.
        self._floor: float = float(np.finfo(np.float64).eps * np.sum(np.abs(self.X)))

    def __repr__(self):
        return f"{self.__class__.__name__}(shape={self.X.shape!r}, iteration={self.iteration!r})"

    def __iter__(self) -> _t.Self:
        return self

    def __next__(self) -> OrpcaStep:
        if self.converged or self.iteration >= self.config.max_iters:
            raise StopIteration

        delta = self.config.delta
        previous = self.objective

        self.U, self.V = update_factors(self.Z, self.U, self.V, self.config.inner_als_sweeps)
        fitted = self.U @ self.V

        outcome = regularize_matrix(self.X, fitted, delta)
        self.Z = outcome.regularized
        self.outlier_mask = outcome.outlier_mask
        self.objective = objective_prox(self.X, self.Z, fitted, delta)

        self.iteration += 1
        self.converged = has_converged(previous, self.objective, self.config.tol, self._floor)

        log.debug(
            "orpca iteration %d: objective=%.12g outliers=%d",
            self.iteration,
            self.objective,
            outcome.num_outliers,
        )
        return OrpcaStep(self.iteration, self.objective, outcome.num_outliers)


def fit_orpca(
    X: _t.ArrayLike,
    config: OrpcaConfig,
    init: _t.Optional[tuple[_t.ArrayLike, _t.ArrayLike]] = None,
) -> OrpcaResult:
    """Run outlier-regularized PCA to convergence.

    Parameters
    ----------
    X: ArrayLike
        The ``p x n`` data.
    config: OrpcaConfig
        The solver settings.
    init: tuple[ArrayLike, ArrayLike], optional
        Warm-start factors ``(U, V)``; the truncated SVD of ``X`` otherwise.

    Returns
    -------
    OrpcaResult
        The fit. ``converged`` is False (and a `ConvergenceWarning` is emitted) if the iteration cap was reached first.
    """

    solver = OrpcaSolver(X, config, init)
    trace = [step.objective for step in solver]
    if not config.record_trace:
        trace = []

    if not solver.converged:
        warnings.warn(
            f"Outlier-regularized PCA stopped after {solver.iteration} iterations without converging.",
            ConvergenceWarning,
            stacklevel=2,
        )

    return OrpcaResult(
        solver.Z + solver.mean,
        solver.U,
        solver.V,
        solver.outlier_mask,
        trace,
        solver.iteration,
        solver.converged,
        solver.mean,
        config.delta.delta,
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


def _pca_residual_scale(X: _t.FloatArray, k: int) -> float:
    U0, V0 = pca_init(X, k)
    return float(np.max(np.abs(X - U0 @ V0), initial=0.0))


def default_schedule(
    X: _t.ArrayLike,
    k: int,
    stages: int = 6,
    ratio: float = 0.3,
    floor: _t.Optional[float] = None,
) -> list[float]:
    """A geometric tolerance schedule starting at the largest absolute residual of the PCA initialization.

    No entry is an outlier at that first tolerance, so the first stage reproduces plain PCA and every later stage
    starts from the solution of the one before. With `floor` given, the schedule instead runs from that start down to
    `floor` (inclusive) at the same ratio, and collapses to ``[floor]`` when the start is already below it. An empty
    list means the data are exactly rank ``k``.
    """

    X_arr = as_matrix(X, "X")
    start = _pca_residual_scale(X_arr, k)

    if floor is not None:
        if start <= floor:
            return [float(floor)]
        schedule = [start]
        while schedule[-1] * ratio > floor:
            schedule.append(schedule[-1] * ratio)
        schedule.append(float(floor))
        return schedule

    if start <= EXACT_FIT_RTOL * float(np.max(np.abs(X_arr), initial=0.0)):
        return []
    return [start * ratio**i for i in range(stages)]


def _log_stage(result: OrpcaResult) -> None:
    log.debug(
        "orpca stage delta=%.6g: iterations=%d outlier_fraction=%.4f converged=%s",
        result.delta,
        result.iterations,
        result.outlier_fraction,
        result.converged,
    )


def orpca_path(
    X: _t.ArrayLike,
    config: OrpcaConfig,
    schedule: _t.Optional[_t.ArrayLike] = None,
    stage_tol: float = 1e-6,
) -> list[OrpcaResult]:
    """Reach ``config.delta`` through a decreasing tolerance schedule, warm-starting every stage.

    Started directly from PCA on grossly corrupted data, a small tolerance keeps ORPCA next to the corrupted
    initialization. Shrinking the tolerance from the PCA residual scale instead lets each stage hand the next one a fit
    that already discounts the largest errors. Without an explicit schedule, `default_schedule` with
    ``floor=config.delta`` is used, so the last stage always runs at ``config.delta``.

    Parameters
    ----------
    X: ArrayLike
        The ``p x n`` data.
    config: OrpcaConfig
        The settings of the final stage.
    schedule: ArrayLike, optional
        A strictly decreasing positive tolerance schedule.
    stage_tol: float, default=1e-6
        Stages before the last stop at ``max(config.tol, stage_tol)``; only the last one runs to ``config.tol``.

    Returns
    -------
    list[OrpcaResult]
        One result per stage.
    """

    X_arr = as_matrix(X, "X")
    if schedule is None:
        deltas = default_schedule(X_arr, config.rank_k, floor=config.delta.delta)
    else:
        deltas = _validate_schedule(schedule)

    loose = max(config.tol, stage_tol)
    path: list[OrpcaResult] = []
    init: _t.Optional[tuple[_t.ArrayLike, _t.ArrayLike]] = None
    for index, delta in enumerate(deltas):
        stage = config.with_delta(delta)
        if index < len(deltas) - 1:
            stage.tol = loose
        result = fit_orpca(X_arr, stage, init)
        path.append(result)
        init = (result.U, result.V)
        _log_stage(result)
    return path


def l1_pca_path(  # noqa: PLR0913
    X: _t.ArrayLike,
    k: int,
    ratio: float = 0.3,
    gap_tol: float = 1e-6,
    max_stages: int = 40,
    max_iters: int = 500,
    tol: float = 1e-10,
) -> list[OrpcaResult]:
    """Shrink the tolerance geometrically until ``|Z - U V|_F / |Z|_F`` drops below `gap_tol`.

    The first stage runs at the largest PCA residual, like `default_schedule`. An empty list means the data are exactly
    rank ``k``. Stops early after `max_stages` stages.
    """

    X_arr = as_matrix(X, "X")
    _check_rank(X_arr.shape, k)
    if not 0.0 < ratio < 1.0:
        msg = f"ratio must lie in (0, 1), got {ratio!r}."
        raise InputDomainError(msg)

    delta = _pca_residual_scale(X_arr, k)
    if delta <= EXACT_FIT_RTOL * float(np.max(np.abs(X_arr), initial=0.0)):
        return []

    path: list[OrpcaResult] = []
    init: _t.Optional[tuple[_t.ArrayLike, _t.ArrayLike]] = None
    for _ in range(max_stages):
        result = fit_orpca(X_arr, OrpcaConfig(k, delta, max_iters=max_iters, tol=tol), init)
        path.append(result)
        init = (result.U, result.V)
        _log_stage(result)

        gap = float(np.linalg.norm(result.Z - result.fitted))
        if gap <= gap_tol * float(np.linalg.norm(result.Z)):
            break
        delta *= ratio
    return path


def _weighted_median_rows(A: _t.FloatArray, w: _t.FloatArray) -> _t.FloatArray:
    """For each row ``a`` of `A`, return ``argmin_x sum_j |a_j - x w_j|``.

    This is the weighted median of ``a_j / w_j`` with weights ``|w_j|``; entries with ``w_j == 0`` don't depend on
    ``x`` and are dropped.
    """

    keep = np.abs(w) > 1e-16
    if not np.any(keep):
        return np.zeros(A.shape[0])

    ratios = A[:, keep] / w[keep]
    weights = np.abs(w[keep])
    order = np.argsort(ratios, axis=1)
    sorted_ratios = np.take_along_axis(ratios, order, axis=1)
    cumulative = np.cumsum(weights[order], axis=1)
    index = np.argmax(cumulative >= 0.5 * weights.sum(), axis=1)
    return sorted_ratios[np.arange(A.shape[0]), index]


def l1_polish(
    X: _t.ArrayLike,
    U: _t.ArrayLike,
    V: _t.ArrayLike,
    sweeps: int = 100,
    tol: float = 1e-12,
) -> tuple[_t.FloatArray, _t.FloatArray]:
    """Alternating weighted-median descent on ``|X - U V|_1``.

    Each sweep updates every rank-one pair ``(U[:, j], V[j])`` in turn, each entry by an exact weighted-median
    minimization, so the L1 error never increases. Sweeps stop once one gains less than ``tol`` times the current
    error, or after `sweeps` of them.
    """

    X_arr = as_matrix(X, "X")
    U_arr = as_matrix(U, "U").copy()
    V_arr = as_matrix(V, "V").copy()

    residual = X_arr - U_arr @ V_arr
    error = float(np.sum(np.abs(residual)))
    for sweep in range(sweeps):
        for j in range(U_arr.shape[1]):
            residual += np.outer(U_arr[:, j], V_arr[j])
            U_arr[:, j] = _weighted_median_rows(residual, V_arr[j])
            V_arr[j] = _weighted_median_rows(residual.T, U_arr[:, j])
            residual -= np.outer(U_arr[:, j], V_arr[j])

        previous, error = error, float(np.sum(np.abs(residual)))
        log.debug("l1 polish sweep %d: error=%.12g", sweep + 1, error)
        if previous - error <= tol * previous:
            break
    return U_arr, V_arr


def l1_pca(  # noqa: PLR0913
    X: _t.ArrayLike,
    k: int,
    schedule: _t.Optional[_t.ArrayLike] = None,
    max_iters: int = 500,
    tol: float = 1e-10,
    polish_sweeps: int = 100,
    gap_tol: float = 1e-6,
) -> tuple[_t.FloatArray, _t.FloatArray]:
    """Approximate fixed-rank L1 PCA, ``argmin_{U, V} |X - U V|_1``, as the small-tolerance limit of `fit_orpca`.

    Parameters
    ----------
    X: ArrayLike
        The ``p x n`` data.
    k: int
        The rank.
    schedule: ArrayLike, optional
        A strictly decreasing positive tolerance schedule. By default `l1_pca_path` shrinks the tolerance until the
        relative gap between ``Z`` and ``U V`` falls below `gap_tol`.
    max_iters: int, default=500
        The iteration cap of every stage.
    tol: float, default=1e-10
        The stopping threshold of every stage.
    polish_sweeps: int, default=100
        The cap on `l1_polish` sweeps applied to the final factors. 0 turns polishing off.
    gap_tol: float, default=1e-6
        The relative gap that ends the default continuation.

    Returns
    -------
    tuple[FloatArray, FloatArray]
        The factors ``U`` and ``V``.
    """

    X_arr = as_matrix(X, "X")
    _check_rank(X_arr.shape, k)

    if schedule is None:
        path = l1_pca_path(X_arr, k, gap_tol=gap_tol, max_iters=max_iters, tol=tol)
        if not path:
            return pca_init(X_arr, k)
    else:
        deltas = _validate_schedule(schedule)
        path = orpca_path(X_arr, OrpcaConfig(k, deltas[-1], max_iters=max_iters, tol=tol), deltas, stage_tol=tol)

    U, V = path[-1].U, path[-1].V
    if polish_sweeps:
        U, V = l1_polish(X_arr, U, V, polish_sweeps)
    return U, V
