"""Robust PCA by convex relaxation, and the trace-norm baseline it is compared against.

The solver minimizes ``|X - Z|_1 + beta |Z|_*``. Dividing by ``beta`` and writing ``S = X - Z`` gives the usual
robust-PCA form ``min |Z|_* + lambda |S|_1`` subject to ``Z + S = X`` with ``lambda = 1 / beta``, which is what the
augmented-Lagrangian iteration below solves. Unlike the nonconvex outlier-regularized PCA, rank is not fixed up
front: it falls out of the singular-value thresholding, and the shrinkage applies to every singular value, so even the
dominant ones are biased downward.
"""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np

from . import _typing_compat as _t
from ._numerics import as_matrix, numerical_rank
from .errors import ConvergenceWarning, InputDomainError
from .proxreg import soft_threshold_array


__all__ = (
    "RpcaConfig",
    "RpcaStep",
    "RpcaResult",
    "RpcaSolver",
    "svt",
    "nuclear_norm",
    "objective_rpca",
    "default_beta",
    "fit_rpca",
    "l2_trace_pca",
    "rpca_optimality",
)


log = logging.getLogger(__name__)


class RpcaConfig:
    """Settings for `fit_rpca`.

    Parameters
    ----------
    beta: float, optional
        The trace-norm weight. Larger values shrink the singular values harder, so more entries are treated as
        corrupted and ``Z`` has lower rank. Defaults to `default_beta` of the data.
    mu0: float, optional
        The initial penalty. Defaults to ``1.25 / sigma_max(X)``.
    rho: float, default=1.5
        The factor the penalty is raised or lowered by when one residual outgrows the other. Must exceed 1.
    max_iters: int, default=1000
        The iteration cap.
    tol: float, default=1e-10
        The stopping threshold for both the relative primal residual ``|X - Z - S|_F / |X|_F`` and the relative dual
        residual ``mu |S - S_prev|_F / |Y|_F``.
    mu_max_factor: float, default=1e7
        The penalty is kept within ``[mu0 / mu_max_factor, mu0 * mu_max_factor]``.
    record_trace: bool, default=True
        Whether to keep the per-iteration objective values.
    """

    __slots__ = ("beta", "mu0", "rho", "max_iters", "tol", "mu_max_factor", "record_trace")

    beta: _t.Optional[float]
    mu0: _t.Optional[float]
    rho: float
    max_iters: int
    tol: float
    mu_max_factor: float
    record_trace: bool

    def __init__(  # noqa: PLR0913
        self,
        beta: _t.Optional[float] = None,
        mu0: _t.Optional[float] = None,
        rho: float = 1.5,
        max_iters: int = 1000,
        tol: float = 1e-10,
        mu_max_factor: float = 1e7,
        record_trace: bool = True,
    ):
        for name, value in (("beta", beta), ("mu0", mu0)):
            if value is not None and not (math.isfinite(value) and value > 0.0):
                msg = f"{name} must be finite and positive, got {value!r}."
                raise InputDomainError(msg)
        if not rho > 1.0:
            msg = f"rho must exceed 1, got {rho!r}."
            raise InputDomainError(msg)
        if max_iters < 1:
            msg = f"max_iters must be at least 1, got {max_iters!r}."
            raise InputDomainError(msg)
        if not tol > 0.0:
            msg = f"tol must be positive, got {tol!r}."
            raise InputDomainError(msg)
        if not mu_max_factor >= 1.0:
            msg = f"mu_max_factor must be at least 1, got {mu_max_factor!r}."
            raise InputDomainError(msg)

        self.beta = None if beta is None else float(beta)
        self.mu0 = None if mu0 is None else float(mu0)
        self.rho = float(rho)
        self.max_iters = int(max_iters)
        self.tol = float(tol)
        self.mu_max_factor = float(mu_max_factor)
        self.record_trace = record_trace

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(beta={self.beta!r}, mu0={self.mu0!r}, rho={self.rho!r}, "
            f"max_iters={self.max_iters!r}, tol={self.tol!r}, mu_max_factor={self.mu_max_factor!r})"
        )

    def with_beta(self, beta: float) -> RpcaConfig:
        return RpcaConfig(beta, self.mu0, self.rho, self.max_iters, self.tol, self.mu_max_factor, self.record_trace)

    def to_dict(self) -> dict[str, _t.Any]:
        return {
            "beta": self.beta,
            "mu0": self.mu0,
            "rho": self.rho,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "mu_max_factor": self.mu_max_factor,
        }


class RpcaStep:
    """The state after one iteration of `RpcaSolver`."""

    __slots__ = ("iteration", "objective", "primal_residual", "dual_residual", "mu")

    def __init__(self, iteration: int, objective: float, primal_residual: float, dual_residual: float, mu: float):
        self.iteration = iteration
        self.objective = objective
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual
        self.mu = mu

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(iteration={self.iteration!r}, objective={self.objective!r}, "
            f"primal_residual={self.primal_residual!r}, dual_residual={self.dual_residual!r}, mu={self.mu!r})"
        )


class RpcaResult:
    """A robust-PCA decomposition ``X ~ Z + S``.

    Attributes
    ----------
    Z: FloatArray
        The low-rank part.
    S: FloatArray
        The sparse part.
    objective_trace: list[float]
        ``|X - Z|_1 + beta |Z|_*`` after every iteration. Empty if tracing was turned off.
    rank_Z: int
        The numerical rank of `Z`.
    iterations: int
        The number of iterations run.
    converged: bool
        Whether the stopping criterion was met.
    primal_residual: float
        ``|X - Z - S|_F / |X|_F`` at the returned iterate.
    dual_residual: float
        ``mu |S - S_prev|_F / |Y|_F`` at the returned iterate.
    multiplier: FloatArray
        The dual variable, scaled to the un-normalized objective. Bounded by 1 in max-abs at the optimum.
    beta: float
        The trace-norm weight actually used.
    """

    __slots__ = (
        "Z",
        "S",
        "objective_trace",
        "rank_Z",
        "iterations",
        "converged",
        "primal_residual",
        "dual_residual",
        "multiplier",
        "beta",
    )

    def __init__(  # noqa: PLR0913
        self,
        Z: _t.FloatArray,
        S: _t.FloatArray,
        objective_trace: list[float],
        iterations: int,
        converged: bool,
        primal_residual: float,
        dual_residual: float,
        multiplier: _t.FloatArray,
        beta: float,
    ):
        self.Z = Z
        self.S = S
        self.objective_trace = objective_trace
        self.rank_Z = numerical_rank(Z)
        self.iterations = iterations
        self.converged = converged
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual
        self.multiplier = multiplier
        self.beta = beta

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(shape={self.Z.shape!r}, beta={self.beta!r}, rank_Z={self.rank_Z!r}, "
            f"iterations={self.iterations!r}, converged={self.converged!r})"
        )


def _shrink_spectrum(M: _t.FloatArray, tau: float) -> tuple[_t.FloatArray, _t.FloatArray]:
    # Returns the thresholded matrix and its non-zero singular values.
    left, sigma, right_t = np.linalg.svd(M, full_matrices=False)
    shrunk = np.maximum(sigma - tau, 0.0)
    keep = int(np.count_nonzero(shrunk))
    return (left[:, :keep] * shrunk[:keep]) @ right_t[:keep], shrunk[:keep]


def svt(M: _t.ArrayLike, tau: float) -> _t.FloatArray:
    """Singular-value thresholding: ``A diag(max(sigma - tau, 0)) B^T`` for ``M = A diag(sigma) B^T``."""

    if not tau > 0.0:
        msg = f"The threshold must be positive, got {tau!r}."
        raise InputDomainError(msg)

    return _shrink_spectrum(as_matrix(M, "M"), tau)[0]


def nuclear_norm(M: _t.ArrayLike) -> float:
    """The sum of the singular values."""

    return float(np.sum(np.linalg.svd(as_matrix(M, "M"), compute_uv=False)))


def objective_rpca(X: _t.ArrayLike, Z: _t.ArrayLike, beta: float) -> float:
    """Evaluate ``|X - Z|_1 + beta |Z|_*``."""

    X_arr = as_matrix(X, "X")
    Z_arr = as_matrix(Z, "Z")
    return float(np.sum(np.abs(X_arr - Z_arr))) + beta * nuclear_norm(Z_arr)


def default_beta(shape: tuple[int, int]) -> float:
    """The default trace-norm weight, ``sqrt(max(p, n))``.

    The solver works with ``lambda = 1 / beta`` as the weight on ``|S|_1``, so this is the usual robust-PCA choice
    ``lambda = 1 / sqrt(max(p, n))``. Both terms of the objective scale linearly with ``X``, so unlike that weight's
    textbook description it needs no scaling by the data's max-abs: the minimizer for ``c X`` is ``c`` times the one
    for ``X``.
    """

    return math.sqrt(max(shape))


class RpcaSolver:
    """Iterator over the augmented-Lagrangian (ADMM) iterations of robust PCA.

    The normalized problem is ``min |Z|_* + lambda |S|_1`` subject to ``Z + S = X`` with ``lambda = 1 / beta``. Each
    step thresholds the singular values for ``Z``, soft-thresholds the entries for ``S`` and takes a dual ascent step
    on the multiplier ``Y``. The penalty ``mu`` starts at ``mu0`` and is rebalanced every iteration: raised by ``rho``
    while the primal residual is more than ten times the dual one, lowered while the dual residual dominates. Growing
    it without bound settles the constraint quickly but freezes ``Z`` short of the optimum.

    Parameters
    ----------
    X: ArrayLike
        The data.
    config: RpcaConfig
        The solver settings.

    Attributes
    ----------
    X: FloatArray
        The data.
    config: RpcaConfig
        The solver settings.
    beta: float
        The trace-norm weight in use.
    Z: FloatArray
        The current low-rank iterate.
    S: FloatArray
        The current sparse iterate.
    Y: FloatArray
        The current multiplier of the normalized problem.
    mu: float
        The current penalty.
    iteration: int
        The number of completed iterations.
    objective: float
        The current objective.
    primal_residual: float
        The current relative constraint violation.
    dual_residual: float
        The current relative change of the multiplier's optimality condition.
    converged: bool
        Whether the stopping criterion has been met.
    """

    X: _t.FloatArray
    config: RpcaConfig
    beta: float
    Z: _t.FloatArray
    S: _t.FloatArray
    Y: _t.FloatArray
    mu: float
    iteration: int
    objective: float
    primal_residual: float
    dual_residual: float
    converged: bool

    def __init__(self, X: _t.ArrayLike, config: RpcaConfig):
        self.X = as_matrix(X, "X")
        self.config = config
        self.beta = config.beta if config.beta is not None else default_beta(self.X.shape)

        self.Z = np.zeros_like(self.X)
        self.S = np.zeros_like(self.X)
        self.iteration = 0
        self.primal_residual = 0.0
        self.dual_residual = 0.0
        self.objective = objective_rpca(self.X, self.Z, self.beta)

        self._norm_fro = float(np.linalg.norm(self.X))
        if self._norm_fro == 0.0:
            # Nothing to decompose.
            self.Y = np.zeros_like(self.X)
            self.mu = 0.0
            self._mu_bounds = (0.0, 0.0)
            self.converged = True
            return

        lam = 1.0 / self.beta
        sigma_max = float(np.linalg.norm(self.X, ord=2))
        self.Y = self.X / max(sigma_max, float(np.max(np.abs(self.X))) / lam)
        self.mu = config.mu0 if config.mu0 is not None else 1.25 / sigma_max
        self._mu_bounds = (self.mu / config.mu_max_factor, self.mu * config.mu_max_factor)
        self.converged = False

    def __repr__(self):
        return f"{self.__class__.__name__}(shape={self.X.shape!r}, beta={self.beta!r}, iteration={self.iteration!r})"

    def __iter__(self) -> _t.Self:
        return self

    def __next__(self) -> RpcaStep:
        if self.converged or self.iteration >= self.config.max_iters:
            raise StopIteration

        lam = 1.0 / self.beta
        mu = self.mu
        previous_S = self.S

        self.Z, kept = _shrink_spectrum(self.X - previous_S + self.Y / mu, 1.0 / mu)
        self.S = soft_threshold_array(self.X - self.Z + self.Y / mu, lam / mu)
        residual = self.X - self.Z - self.S
        self.Y = self.Y + mu * residual

        self.iteration += 1
        self.primal_residual = float(np.linalg.norm(residual)) / self._norm_fro
        dual_scale = max(float(np.linalg.norm(self.Y)), np.finfo(np.float64).tiny)
        self.dual_residual = mu * float(np.linalg.norm(self.S - previous_S)) / dual_scale
        self.objective = float(np.sum(np.abs(self.X - self.Z))) + self.beta * float(np.sum(kept))

        tol = self.config.tol
        self.converged = self.primal_residual <= tol and self.dual_residual <= tol

        lo, hi = self._mu_bounds
        if self.primal_residual > 10.0 * self.dual_residual:
            self.mu = min(mu * self.config.rho, hi)
        elif self.dual_residual > 10.0 * self.primal_residual:
            self.mu = max(mu / self.config.rho, lo)

        log.debug(
            "rpca iteration %d: objective=%.12g primal=%.3e dual=%.3e mu=%.3e",
            self.iteration,
            self.objective,
            self.primal_residual,
            self.dual_residual,
            mu,
        )
        return RpcaStep(self.iteration, self.objective, self.primal_residual, self.dual_residual, mu)


def fit_rpca(X: _t.ArrayLike, config: _t.Optional[RpcaConfig] = None) -> RpcaResult:
    """Decompose `X` into a low-rank and a sparse part.

    Parameters
    ----------
    X: ArrayLike
        The data.
    config: RpcaConfig, optional
        The solver settings. Defaults to ``RpcaConfig()``.

    Returns
    -------
    RpcaResult
        The decomposition. If the iteration cap is hit first, the iterate whose larger residual was smallest is
        returned, ``converged`` is False, and a `ConvergenceWarning` is emitted.
    """

    if config is None:
        config = RpcaConfig()

    solver = RpcaSolver(X, config)
    trace: list[float] = []
    best: _t.Optional[tuple[float, RpcaStep, _t.FloatArray, _t.FloatArray, _t.FloatArray]] = None
    for step in solver:
        if config.record_trace:
            trace.append(step.objective)
        worst = max(step.primal_residual, step.dual_residual)
        if best is None or worst <= best[0]:
            best = (worst, step, solver.Z, solver.S, solver.Y)

    if solver.converged or best is None:
        Z, S, Y = solver.Z, solver.S, solver.Y
        primal, dual = solver.primal_residual, solver.dual_residual
    else:
        _, step, Z, S, Y = best
        primal, dual = step.primal_residual, step.dual_residual
        warnings.warn(
            f"Robust PCA stopped after {solver.iteration} iterations without converging.",
            ConvergenceWarning,
            stacklevel=2,
        )

    return RpcaResult(Z, S, trace, solver.iteration, solver.converged, primal, dual, solver.beta * Y, solver.beta)


def l2_trace_pca(X: _t.ArrayLike, beta: float) -> _t.FloatArray:
    """Solve ``argmin_Z (1 / 2) |X - Z|_F^2 + beta |Z|_*`` in closed form: `svt` of `X` at `beta`."""

    return svt(X, beta)


def rpca_optimality(X: _t.ArrayLike, result: RpcaResult) -> dict[str, float]:
    """Check the first-order optimality of a decomposition using its multiplier ``G``.

    At the optimum, ``G`` is a subgradient of ``|.|_1`` at ``X - Z`` and ``G / beta`` is one of ``|.|_*`` at ``Z``. The
    first condition is tested entry-wise. For the second, ``G / beta`` projected onto the row and column spaces of ``Z``
    must equal ``A B^T`` and the remainder must have spectral norm at most 1.

    Returns
    -------
    dict[str, float]
        ``l1_violation``: the largest violation of the ``|.|_1`` subgradient conditions.
        ``trace_residual``: ``|P(G / beta) - A B^T|_F`` on the row and column spaces of ``Z``.
        ``trace_spectral_excess``: how far the spectral norm of the remainder exceeds 1 (zero if it doesn't).
    """

    X_arr = as_matrix(X, "X")
    G = result.multiplier
    E = X_arr - result.Z

    scale = float(np.max(np.abs(X_arr))) if X_arr.size else 0.0
    support_tol = 1e-8 * max(scale, 1.0)
    support = np.abs(E) > support_tol

    l1_violation = 0.0
    if np.any(support):
        l1_violation = float(np.max(np.abs(G[support] - np.sign(E[support]))))
    if np.any(~support):
        l1_violation = max(l1_violation, float(np.max(np.abs(G[~support]))) - 1.0, 0.0)

    rank = result.rank_Z
    left, _, right_t = np.linalg.svd(result.Z, full_matrices=False)
    A = left[:, :rank]
    B = right_t[:rank].T
    H = G / result.beta
    projected = A @ (A.T @ H) + (H @ B) @ B.T - A @ (A.T @ H @ B) @ B.T
    trace_residual = float(np.linalg.norm(projected - A @ B.T))
    remainder = H - projected
    spectral = float(np.linalg.norm(remainder, ord=2)) if remainder.size else 0.0

    return {
        "l1_violation": l1_violation,
        "trace_residual": trace_residual,
        "trace_spectral_excess": max(spectral - 1.0, 0.0),
    }
