"""Wall-clock comparison of outlier-regularized PCA and robust PCA at matched tolerance and matched rank.

Both solvers run on the same seeded corrupted matrix, normalized to max-abs 1. Robust PCA picks its own rank; the
outlier tolerance of ORPCA is then bisected (in log space) until the effective rank of its ``Z`` matches. ORPCA
always runs through `orpca_path`, and its iteration count sums all stages. Timings are medians over sequential
repetitions.
"""

from __future__ import annotations

import logging
import math
import statistics
import time
import warnings

import numpy as np

from . import _typing_compat as _t
from .datasets import LowRankCorruptionSpec, gen_lowrank_corrupted
from .errors import ConvergenceWarning, InputDomainError
from .metrics import normalize_max_abs, numerical_rank
from .orpca import OrpcaConfig, OrpcaResult, objective_orpca, orpca_path
from .rpca import RpcaConfig, RpcaResult, default_beta, fit_rpca, objective_rpca


__all__ = ("TimeCatcher", "BenchConfig", "BenchReport", "match_delta", "run_bench")


log = logging.getLogger(__name__)


class TimeCatcher:
    """Context manager that records the wall-clock time spent inside it in `elapsed`."""

    elapsed: float

    def __init__(self):
        self.elapsed = 0.0

    def __enter__(self):
        self.elapsed = time.perf_counter()
        return self

    def __exit__(self, *_exc_info: object):
        self.elapsed = time.perf_counter() - self.elapsed


class BenchConfig:
    """Settings for `run_bench`.

    Parameters
    ----------
    dims: tuple[tuple[int, int], ...], default=((400, 400),)
        The ``(p, n)`` shapes to benchmark.
    k_true: int, default=20
        The planted rank of the synthetic data.
    rank: int, default=20
        The rank ``k`` given to ORPCA.
    corruption_frac: float, default=0.05
        The share of grossly corrupted entries.
    noise_sigma: float, default=0.0
        Dense noise added to the corrupted matrix.
    seed: int, default=0
        The data seed.
    repetitions: int, default=3
        The number of timed runs per solver. At least 3.
    tol: float, default=1e-10
        The stopping tolerance of both solvers.
    beta: float, optional
        The robust-PCA trace-norm weight. Defaults to `default_beta`.
    delta: float, optional
        A fixed ORPCA tolerance. When omitted it is bisected to match the rank of the robust-PCA solution.
    rank_rtol: float, default=1e-3
        The relative singular-value cutoff for the effective rank used in matching. ORPCA keeps small high-rank
        components in ``Z`` on purpose, so the strict numerical rank would always be full.
    scaling_ns: tuple[int, ...], default=()
        Column counts for the ORPCA scaling run, at the row count of the first shape.
    """

    __slots__ = (
        "dims",
        "k_true",
        "rank",
        "corruption_frac",
        "noise_sigma",
        "seed",
        "repetitions",
        "tol",
        "beta",
        "delta",
        "rank_rtol",
        "scaling_ns",
    )

    _fields = __slots__

    dims: tuple[tuple[int, int], ...]
    k_true: int
    rank: int
    corruption_frac: float
    noise_sigma: float
    seed: int
    repetitions: int
    tol: float
    beta: _t.Optional[float]
    delta: _t.Optional[float]
    rank_rtol: float
    scaling_ns: tuple[int, ...]

    def __init__(  # noqa: PLR0913
        self,
        dims: _t.Optional[tuple[tuple[int, int], ...]] = None,
        k_true: int = 20,
        rank: int = 20,
        corruption_frac: float = 0.05,
        noise_sigma: float = 0.0,
        seed: int = 0,
        repetitions: int = 3,
        tol: float = 1e-10,
        beta: _t.Optional[float] = None,
        delta: _t.Optional[float] = None,
        rank_rtol: float = 1e-3,
        scaling_ns: tuple[int, ...] = (),
    ):
        shapes = ((400, 400),) if dims is None else tuple((int(p), int(n)) for p, n in dims)
        if not shapes or any(p < 1 or n < 1 for p, n in shapes):
            msg = f"dims must list positive (p, n) pairs, got {dims!r}."
            raise InputDomainError(msg)
        if k_true < 1 or rank < 1:
            msg = "k_true and rank must be at least 1."
            raise InputDomainError(msg)
        if repetitions < 3:
            msg = f"Medians need at least 3 repetitions, got {repetitions!r}."
            raise InputDomainError(msg)
        if not 0.0 < rank_rtol < 1.0:
            msg = f"rank_rtol must lie in (0, 1), got {rank_rtol!r}."
            raise InputDomainError(msg)
        if any(n < 1 for n in scaling_ns):
            msg = f"scaling_ns must be positive, got {scaling_ns!r}."
            raise InputDomainError(msg)

        self.dims = shapes
        self.k_true = int(k_true)
        self.rank = int(rank)
        self.corruption_frac = float(corruption_frac)
        self.noise_sigma = float(noise_sigma)
        self.seed = int(seed)
        self.repetitions = int(repetitions)
        self.tol = float(tol)
        self.beta = None if beta is None else float(beta)
        self.delta = None if delta is None else float(delta)
        self.rank_rtol = float(rank_rtol)
        self.scaling_ns = tuple(int(n) for n in scaling_ns)

    def __repr__(self):
        return f"{self.__class__.__name__}(dims={self.dims!r}, rank={self.rank!r}, seed={self.seed!r})"

    @classmethod
    def from_dict(cls, data: dict[str, _t.Any]) -> _t.Self:
        if not isinstance(data, dict):  # pyright: ignore [reportUnnecessaryIsInstance]
            msg = "The bench configuration must be a JSON object."
            raise InputDomainError(msg)
        unknown = sorted(set(data) - set(cls._fields))
        if unknown:
            msg = f"Unknown bench configuration field(s): {', '.join(unknown)}."
            raise InputDomainError(msg)

        kwargs = dict(data)
        if "dims" in kwargs:
            kwargs["dims"] = tuple(tuple(shape) for shape in kwargs["dims"])
        if "scaling_ns" in kwargs:
            kwargs["scaling_ns"] = tuple(kwargs["scaling_ns"])
        return cls(**kwargs)

    def to_dict(self) -> dict[str, _t.Any]:
        data = {name: getattr(self, name) for name in self._fields}
        data["dims"] = [list(shape) for shape in self.dims]
        data["scaling_ns"] = list(self.scaling_ns)
        return data


class BenchReport:
    """The outcome of `run_bench`.

    Attributes
    ----------
    config: BenchConfig
        The resolved configuration.
    entries: list[dict[str, Any]]
        One record per shape, with the per-solver timings, iterations, final objectives, effective ranks and
        convergence flags.
    scaling: dict[str, Any] | None
        ORPCA time per iteration against ``n`` and its log-log slope, if a scaling run was requested.
    """

    __slots__ = ("config", "entries", "scaling")

    config: BenchConfig
    entries: list[dict[str, _t.Any]]
    scaling: _t.Optional[dict[str, _t.Any]]

    def __init__(self, config: BenchConfig, entries: list[dict[str, _t.Any]], scaling: _t.Optional[dict[str, _t.Any]]):
        self.config = config
        self.entries = entries
        self.scaling = scaling

    def __repr__(self):
        return f"{self.__class__.__name__}(config={self.config!r}, entries={len(self.entries)!r})"

    def to_dict(self) -> dict[str, _t.Any]:
        return {"config": self.config.to_dict(), "entries": self.entries, "scaling": self.scaling}


def _quiet_orpca(X: _t.FloatArray, config: OrpcaConfig) -> tuple[OrpcaResult, int]:
    # The final stage of the continuation and the iteration count summed over all stages.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        path = orpca_path(X, config)
    return path[-1], sum(stage.iterations for stage in path)


def _quiet_rpca(X: _t.FloatArray, config: RpcaConfig) -> RpcaResult:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return fit_rpca(X, config)


def match_delta(  # noqa: PLR0913
    X: _t.FloatArray,
    rank_k: int,
    target_rank: int,
    rank_rtol: float = 1e-3,
    bounds: tuple[float, float] = (1e-6, 1.0),
    steps: int = 12,
) -> float:
    """Bisect the ORPCA tolerance, in log space, so the effective rank of ``Z`` hits `target_rank`.

    Larger tolerances regularize fewer entries and leave ``Z`` closer to the full-rank data, so the rank grows with the
    tolerance. Returns the first exact match, or else the tried tolerance whose rank came closest.
    """

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    best_delta, best_gap = math.exp(hi), math.inf
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        delta = math.exp(mid)
        # The search only needs the rank, so a loose stopping rule is enough.
        result, _ = _quiet_orpca(X, OrpcaConfig(rank_k, delta, tol=1e-6, record_trace=False))
        rank = numerical_rank(result.Z, rank_rtol)
        log.debug("delta bisection: delta=%.4g rank=%d target=%d", delta, rank, target_rank)

        gap = abs(rank - target_rank)
        if gap < best_gap:
            best_delta, best_gap = delta, gap
        if rank == target_rank:
            break
        if rank < target_rank:
            lo = mid
        else:
            hi = mid
    return best_delta


def _solver_record(
    times: list[float],
    iterations: int,
    objective: float,
    rank: int,
    converged: bool,
) -> dict[str, _t.Any]:
    return {
        "wall_time_seconds": statistics.median(times),
        "times": times,
        "repetitions": len(times),
        "iterations": iterations,
        "final_objective": objective,
        "rank_Z": rank,
        "converged": converged,
    }


def _bench_shape(config: BenchConfig, p: int, n: int) -> dict[str, _t.Any]:
    k_true = min(config.k_true, p, n)
    rank_k = min(config.rank, p, n)
    spec = LowRankCorruptionSpec(
        p,
        n,
        k_true,
        corruption_frac=config.corruption_frac,
        noise_sigma=config.noise_sigma,
        seed=config.seed,
    )
    _, X_raw, _ = gen_lowrank_corrupted(spec)
    X, _ = normalize_max_abs(X_raw)

    beta = config.beta if config.beta is not None else default_beta(X.shape)
    rpca_config = RpcaConfig(beta=beta, tol=config.tol, record_trace=False)
    rpca_times: list[float] = []
    rpca_result = None
    for _ in range(config.repetitions):
        with TimeCatcher() as tc:
            rpca_result = _quiet_rpca(X, rpca_config)
        rpca_times.append(tc.elapsed)
    assert rpca_result is not None
    target_rank = numerical_rank(rpca_result.Z, config.rank_rtol)

    if config.delta is not None:
        delta = config.delta
    else:
        delta = match_delta(X, rank_k, target_rank, config.rank_rtol)

    orpca_config = OrpcaConfig(rank_k, delta, tol=config.tol, record_trace=False)
    orpca_times: list[float] = []
    orpca_result, orpca_iterations = None, 0
    for _ in range(config.repetitions):
        with TimeCatcher() as tc:
            orpca_result, orpca_iterations = _quiet_orpca(X, orpca_config)
        orpca_times.append(tc.elapsed)
    assert orpca_result is not None

    log.info(
        "bench %dx%d: orpca %.3fs, rpca %.3fs",
        p,
        n,
        statistics.median(orpca_times),
        statistics.median(rpca_times),
    )
    return {
        "p": p,
        "n": n,
        "k_true": k_true,
        "rank_k": rank_k,
        "delta": delta,
        "beta": beta,
        "target_rank": target_rank,
        "orpca": _solver_record(
            orpca_times,
            orpca_iterations,
            objective_orpca(X, orpca_result.Z, orpca_result.U, orpca_result.V, delta),
            numerical_rank(orpca_result.Z, config.rank_rtol),
            orpca_result.converged,
        ),
        "rpca": _solver_record(
            rpca_times,
            rpca_result.iterations,
            objective_rpca(X, rpca_result.Z, beta),
            numerical_rank(rpca_result.Z, config.rank_rtol),
            rpca_result.converged,
        ),
    }


def _scaling_run(config: BenchConfig, delta: float) -> dict[str, _t.Any]:
    p = config.dims[0][0]
    per_iteration: list[float] = []
    for n in config.scaling_ns:
        spec = LowRankCorruptionSpec(
            p,
            n,
            min(config.k_true, p, n),
            corruption_frac=config.corruption_frac,
            noise_sigma=config.noise_sigma,
            seed=config.seed,
        )
        _, X_raw, _ = gen_lowrank_corrupted(spec)
        X, _ = normalize_max_abs(X_raw)
        orpca_config = OrpcaConfig(min(config.rank, p, n), delta, tol=config.tol, record_trace=False)

        samples: list[float] = []
        for _ in range(config.repetitions):
            with TimeCatcher() as tc:
                _, iterations = _quiet_orpca(X, orpca_config)
            samples.append(tc.elapsed / max(iterations, 1))
        per_iteration.append(statistics.median(samples))

    slope = None
    if len(config.scaling_ns) >= 2:
        slope = float(np.polyfit(np.log(config.scaling_ns), np.log(per_iteration), 1)[0])
    return {"p": p, "ns": list(config.scaling_ns), "seconds_per_iteration": per_iteration, "loglog_slope": slope}


def run_bench(config: BenchConfig) -> BenchReport:
    """Time both solvers on every configured shape. Non-convergence is recorded in the report, never raised."""

    entries = [_bench_shape(config, p, n) for p, n in config.dims]

    scaling = None
    if config.scaling_ns:
        scaling = _scaling_run(config, entries[0]["delta"])
    return BenchReport(config, entries, scaling)
