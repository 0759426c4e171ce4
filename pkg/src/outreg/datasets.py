"""Seeded synthetic data: a noisy line with planted outliers, and low-rank matrices with gross corruption.

Every generator is a pure function of its spec. Randomness comes from ``numpy.random.Generator(PCG64(seed))`` and
nothing else, so the same spec gives bit-identical data on every platform numpy supports.
"""

from __future__ import annotations

import math

import numpy as np

from . import _typing_compat as _t
from .errors import InputDomainError


__all__ = ("make_rng", "LineDatasetSpec", "gen_line_dataset", "LowRankCorruptionSpec", "gen_lowrank_corrupted")


def make_rng(seed: int) -> np.random.Generator:
    """The package's only source of randomness: a PCG64 bit generator with an explicit seed."""

    return np.random.Generator(np.random.PCG64(seed))


def _reject_unknown_keys(cls_name: str, data: _t.Any, known: tuple[str, ...]) -> None:
    if not isinstance(data, dict):
        msg = f"{cls_name} must be a JSON object."
        raise InputDomainError(msg)
    unknown = sorted(set(data) - set(known))  # pyright: ignore [reportUnknownArgumentType]
    if unknown:
        msg = f"Unknown {cls_name} field(s): {', '.join(unknown)}."
        raise InputDomainError(msg)


class LineDatasetSpec:
    """A noisy line ``y = slope * x + intercept`` with a few points displaced far off it.

    Parameters
    ----------
    n_clean: int, default=10
        The number of points near the line.
    n_outliers: int, default=3
        The number of displaced points. They come last.
    slope: float, default=1.0
        The slope of the line.
    intercept: float, default=0.5
        The intercept of the line.
    noise_sigma: float, default=0.05
        The standard deviation of the Gaussian noise on the clean points. Draws are truncated at three standard
        deviations.
    outlier_offsets: tuple[float, ...], default=(3.0, -2.5, 4.0)
        The signed vertical displacement of each outlier from the line. There must be at least `n_outliers` of them,
        and each must exceed ``3 * noise_sigma`` in magnitude.
    x_range: tuple[float, float], default=(0.0, 1.0)
        The interval the abscissae are drawn from.
    seed: int, default=0
        The generator seed.
    """

    __slots__ = ("n_clean", "n_outliers", "slope", "intercept", "noise_sigma", "outlier_offsets", "x_range", "seed")

    _fields = __slots__

    n_clean: int
    n_outliers: int
    slope: float
    intercept: float
    noise_sigma: float
    outlier_offsets: tuple[float, ...]
    x_range: tuple[float, float]
    seed: int

    def __init__(  # noqa: PLR0913
        self,
        n_clean: int = 10,
        n_outliers: int = 3,
        slope: float = 1.0,
        intercept: float = 0.5,
        noise_sigma: float = 0.05,
        outlier_offsets: _t.Optional[tuple[float, ...]] = None,
        x_range: tuple[float, float] = (0.0, 1.0),
        seed: int = 0,
    ):
        offsets = (3.0, -2.5, 4.0) if outlier_offsets is None else tuple(float(o) for o in outlier_offsets)

        if n_clean < 0 or n_outliers < 0 or n_clean + n_outliers < 2:
            msg = f"Need at least two points in total, got n_clean={n_clean!r} and n_outliers={n_outliers!r}."
            raise InputDomainError(msg)
        if not (math.isfinite(noise_sigma) and noise_sigma >= 0.0):
            msg = f"noise_sigma must be finite and non-negative, got {noise_sigma!r}."
            raise InputDomainError(msg)
        if len(offsets) < n_outliers:
            msg = f"{n_outliers} outliers requested but only {len(offsets)} offsets given."
            raise InputDomainError(msg)
        if any(not abs(o) > 3.0 * noise_sigma for o in offsets[:n_outliers]):
            msg = "Every outlier offset must exceed three noise standard deviations in magnitude."
            raise InputDomainError(msg)
        lo, hi = (float(v) for v in x_range)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            msg = f"x_range must be a finite interval with lo < hi, got {x_range!r}."
            raise InputDomainError(msg)

        self.n_clean = int(n_clean)
        self.n_outliers = int(n_outliers)
        self.slope = float(slope)
        self.intercept = float(intercept)
        self.noise_sigma = float(noise_sigma)
        self.outlier_offsets = offsets
        self.x_range = (lo, hi)
        self.seed = int(seed)

    def __repr__(self):
        attrs = ", ".join(f"{name}={getattr(self, name)!r}" for name in self._fields)
        return f"{self.__class__.__name__}({attrs})"

    @classmethod
    def from_dict(cls, data: dict[str, _t.Any]) -> _t.Self:
        _reject_unknown_keys(cls.__name__, data, cls._fields)
        kwargs = dict(data)
        if "outlier_offsets" in kwargs:
            kwargs["outlier_offsets"] = tuple(kwargs["outlier_offsets"])
        if "x_range" in kwargs:
            kwargs["x_range"] = tuple(kwargs["x_range"])
        return cls(**kwargs)

    def to_dict(self) -> dict[str, _t.Any]:
        data = {name: getattr(self, name) for name in self._fields}
        data["outlier_offsets"] = list(self.outlier_offsets)
        data["x_range"] = list(self.x_range)
        return data


def _truncated_normal(rng: np.random.Generator, sigma: float, size: int, limit: float = 3.0) -> _t.FloatArray:
    """Gaussian draws, redrawing any that land beyond ``limit`` standard deviations."""

    draws = rng.normal(0.0, 1.0, size)
    outside = np.abs(draws) > limit
    while np.any(outside):
        draws[outside] = rng.normal(0.0, 1.0, int(np.count_nonzero(outside)))
        outside = np.abs(draws) > limit
    return sigma * draws


def gen_line_dataset(spec: LineDatasetSpec) -> tuple[_t.FloatArray, _t.FloatArray]:
    """Draw a line dataset.

    The abscissae are uniform on ``spec.x_range``. Clean points get truncated Gaussian noise; the last
    ``spec.n_outliers`` points sit exactly ``outlier_offsets[i]`` off the line, so they and only they have residuals
    beyond three standard deviations.

    Returns
    -------
    tuple[FloatArray, FloatArray]
        The ``1 x n`` design matrix and the ``n`` targets.
    """

    rng = make_rng(spec.seed)
    total = spec.n_clean + spec.n_outliers

    x = rng.uniform(spec.x_range[0], spec.x_range[1], total)
    noise = _truncated_normal(rng, spec.noise_sigma, spec.n_clean)

    y = spec.slope * x + spec.intercept
    y[: spec.n_clean] += noise
    y[spec.n_clean :] += np.asarray(spec.outlier_offsets[: spec.n_outliers])
    return x.reshape(1, -1), y


class LowRankCorruptionSpec:
    """A planted low-rank matrix with sparse gross corruption.

    Parameters
    ----------
    p: int
        The number of rows.
    n: int
        The number of columns.
    k_true: int
        The planted rank.
    singular_profile: tuple[float, ...], optional
        The planted singular values, ``k_true`` positive numbers. Defaults to a linear ramp from 1 down to 0.5 scaled by
        ``sqrt(p * n / k_true)``, which makes the entries of order one.
    corruption_frac: float, default=0.05
        The share of entries to corrupt. Ignored when `block_occlusion` is set.
    corruption_magnitude: float, optional
        The size of the gross errors. Defaults to five times the max-abs of the clean matrix. Each corrupted entry gets
        ``+-magnitude * uniform(0.5, 1)`` added to it.
    block_occlusion: tuple[int, int, int], optional
        ``(height, width, count)``: corrupt ``count`` rectangular blocks instead of scattered entries.
    noise_sigma: float, default=0.0
        Dense Gaussian noise added to every entry of the corrupted matrix. The clean matrix stays noise-free.
    seed: int, default=0
        The generator seed.
    """

    __slots__ = (
        "p",
        "n",
        "k_true",
        "singular_profile",
        "corruption_frac",
        "corruption_magnitude",
        "block_occlusion",
        "noise_sigma",
        "seed",
    )

    _fields = __slots__

    p: int
    n: int
    k_true: int
    singular_profile: tuple[float, ...]
    corruption_frac: float
    corruption_magnitude: _t.Optional[float]
    block_occlusion: _t.Optional[tuple[int, int, int]]
    noise_sigma: float
    seed: int

    def __init__(  # noqa: PLR0913
        self,
        p: int,
        n: int,
        k_true: int,
        singular_profile: _t.Optional[tuple[float, ...]] = None,
        corruption_frac: float = 0.05,
        corruption_magnitude: _t.Optional[float] = None,
        block_occlusion: _t.Optional[tuple[int, int, int]] = None,
        noise_sigma: float = 0.0,
        seed: int = 0,
    ):
        if p < 1 or n < 1:
            msg = f"Dimensions must be positive, got {p!r} x {n!r}."
            raise InputDomainError(msg)
        if not 1 <= k_true <= min(p, n):
            msg = f"k_true must lie in [1, {min(p, n)}], got {k_true!r}."
            raise InputDomainError(msg)

        if singular_profile is None:
            profile = tuple(float(s) for s in math.sqrt(p * n / k_true) * np.linspace(1.0, 0.5, k_true))
        else:
            profile = tuple(float(s) for s in singular_profile)
        if len(profile) != k_true or not all(math.isfinite(s) and s > 0.0 for s in profile):
            msg = f"singular_profile must hold {k_true} finite positive values."
            raise InputDomainError(msg)

        if not 0.0 <= corruption_frac <= 1.0:
            msg = f"corruption_frac must lie in [0, 1], got {corruption_frac!r}."
            raise InputDomainError(msg)
        if corruption_magnitude is not None and not (
            math.isfinite(corruption_magnitude) and corruption_magnitude > 0.0
        ):
            msg = f"corruption_magnitude must be finite and positive, got {corruption_magnitude!r}."
            raise InputDomainError(msg)
        if block_occlusion is not None:
            height, width, count = (int(v) for v in block_occlusion)
            if not (1 <= height <= p and 1 <= width <= n and count >= 0):
                msg = f"block_occlusion {block_occlusion!r} does not fit a {p} x {n} matrix."
                raise InputDomainError(msg)
            block_occlusion = (height, width, count)
        if not (math.isfinite(noise_sigma) and noise_sigma >= 0.0):
            msg = f"noise_sigma must be finite and non-negative, got {noise_sigma!r}."
            raise InputDomainError(msg)

        self.p = int(p)
        self.n = int(n)
        self.k_true = int(k_true)
        self.singular_profile = profile
        self.corruption_frac = float(corruption_frac)
        self.corruption_magnitude = None if corruption_magnitude is None else float(corruption_magnitude)
        self.block_occlusion = block_occlusion
        self.noise_sigma = float(noise_sigma)
        self.seed = int(seed)

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(p={self.p!r}, n={self.n!r}, k_true={self.k_true!r}, "
            f"corruption_frac={self.corruption_frac!r}, block_occlusion={self.block_occlusion!r}, seed={self.seed!r})"
        )

    @classmethod
    def from_dict(cls, data: dict[str, _t.Any]) -> _t.Self:
        _reject_unknown_keys(cls.__name__, data, cls._fields)
        kwargs = dict(data)
        for key in ("singular_profile", "block_occlusion"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict[str, _t.Any]:
        data = {name: getattr(self, name) for name in self._fields}
        data["singular_profile"] = list(self.singular_profile)
        if self.block_occlusion is not None:
            data["block_occlusion"] = list(self.block_occlusion)
        return data


def _orthonormal(rng: np.random.Generator, rows: int, cols: int) -> _t.FloatArray:
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    # Fix the column signs so the factor is a deterministic function of the draws.
    return q * np.where(np.diag(r) < 0.0, -1.0, 1.0)


def gen_lowrank_corrupted(spec: LowRankCorruptionSpec) -> tuple[_t.FloatArray, _t.FloatArray, _t.BoolArray]:
    """Draw a low-rank matrix and a grossly corrupted copy of it.

    Returns
    -------
    tuple[FloatArray, FloatArray, BoolArray]
        The clean matrix, the corrupted matrix, and the mask of corrupted entries.
    """

    rng = make_rng(spec.seed)
    left = _orthonormal(rng, spec.p, spec.k_true)
    right = _orthonormal(rng, spec.n, spec.k_true)
    X_clean = (left * np.asarray(spec.singular_profile)) @ right.T

    mask = np.zeros((spec.p, spec.n), dtype=bool)
    if spec.block_occlusion is not None:
        height, width, count = spec.block_occlusion
        for _ in range(count):
            top = int(rng.integers(0, spec.p - height + 1))
            side = int(rng.integers(0, spec.n - width + 1))
            mask[top : top + height, side : side + width] = True
    else:
        count = round(spec.corruption_frac * spec.p * spec.n)
        chosen = rng.choice(spec.p * spec.n, size=count, replace=False)
        mask.flat[chosen] = True

    magnitude = spec.corruption_magnitude
    if magnitude is None:
        magnitude = 5.0 * float(np.max(np.abs(X_clean)))

    num_corrupted = int(np.count_nonzero(mask))
    signs = np.where(rng.random(num_corrupted) < 0.5, -1.0, 1.0)
    errors = signs * magnitude * rng.uniform(0.5, 1.0, num_corrupted)

    X_corrupted = X_clean.copy()
    if spec.noise_sigma > 0.0:
        X_corrupted += rng.normal(0.0, spec.noise_sigma, X_clean.shape)
    X_corrupted[mask] += errors
    return X_clean, X_corrupted, mask
