"""Spectra, ranks and reconstruction residuals for comparing decompositions."""

from __future__ import annotations

import numpy as np

from . import _numerics, _typing_compat as _t
from ._numerics import as_matrix, check_same_shape
from .errors import InputDomainError


__all__ = (
    "spectrum",
    "numerical_rank",
    "normalize_max_abs",
    "SpectrumReport",
    "spectrum_report",
    "reconstruction_report",
)


def spectrum(M: _t.ArrayLike) -> _t.FloatArray:
    """All ``min(p, n)`` singular values of `M`, largest first."""

    return np.linalg.svd(as_matrix(M, "M"), compute_uv=False)


def numerical_rank(M: _t.ArrayLike, rtol: float = 1e-10) -> int:
    """The number of singular values above ``rtol * sigma_max``."""

    return _numerics.numerical_rank(as_matrix(M, "M"), rtol)


def normalize_max_abs(M: _t.ArrayLike) -> tuple[_t.FloatArray, float]:
    """Scale `M` into ``[-1, 1]`` by its largest absolute entry.

    Returns
    -------
    tuple[FloatArray, float]
        The scaled matrix and the scale. Multiply by the scale to undo. An all-zero matrix has scale 1.
    """

    M_arr = as_matrix(M, "M")
    scale = float(np.max(np.abs(M_arr))) if M_arr.size else 0.0
    if scale == 0.0:
        scale = 1.0
    return M_arr / scale, scale


class SpectrumReport:
    """Singular-value spectra of several reconstructions against a reference.

    Attributes
    ----------
    labels: list[str]
        The name of each reconstruction.
    spectra: dict[str, FloatArray]
        The singular values of each reconstruction.
    reference: FloatArray
        The singular values of the reference matrix.
    downshift: dict[str, FloatArray]
        ``sigma_i(reference) - sigma_i(reconstruction)`` for each label. Positive entries mean the reconstruction
        shrank that component. These are signed differences, so unlike the spectra they are neither sorted nor
        non-negative in general.
    """

    __slots__ = ("labels", "spectra", "reference", "downshift")

    labels: list[str]
    spectra: dict[str, _t.FloatArray]
    reference: _t.FloatArray
    downshift: dict[str, _t.FloatArray]

    def __init__(self, spectra: dict[str, _t.FloatArray], reference: _t.FloatArray):
        for label, values in [("reference", reference), *spectra.items()]:
            if np.any(values < 0.0) or np.any(np.diff(values) > 0.0):
                msg = f"The spectrum of {label!r} is not non-negative and non-increasing."
                raise InputDomainError(msg)
            if values.shape != reference.shape:
                msg = f"The spectrum of {label!r} has {values.size} values; the reference has {reference.size}."
                raise InputDomainError(msg)

        self.labels = list(spectra)
        self.spectra = spectra
        self.reference = reference
        self.downshift = {label: reference - values for label, values in spectra.items()}

    def __repr__(self):
        return f"{self.__class__.__name__}(labels={self.labels!r}, size={self.reference.size!r})"

    def mean_downshift(self, label: str, top: int) -> float:
        """The mean downshift of the leading `top` components of one reconstruction."""

        return float(np.mean(self.downshift[label][:top]))

    def to_dict(self) -> dict[str, _t.Any]:
        return {
            "labels": self.labels,
            "reference": self.reference.tolist(),
            "spectra": {label: values.tolist() for label, values in self.spectra.items()},
            "downshift": {label: values.tolist() for label, values in self.downshift.items()},
        }


def spectrum_report(matrices: dict[str, _t.ArrayLike], reference: _t.ArrayLike) -> SpectrumReport:
    """Compute the spectra of several same-shape matrices and their downshifts from `reference`."""

    ref = as_matrix(reference, "reference")
    spectra: dict[str, _t.FloatArray] = {}
    for label, matrix in matrices.items():
        arr = as_matrix(matrix, label)
        check_same_shape(ref, arr, ("reference", label))
        spectra[label] = spectrum(arr)
    return SpectrumReport(spectra, spectrum(ref))


def reconstruction_report(
    X_clean: _t.ArrayLike,
    X_corrupted: _t.ArrayLike,
    results: dict[str, _t.ArrayLike],
) -> dict[str, _t.Any]:
    """Compare reconstructions with the noise-free matrix they should recover.

    Parameters
    ----------
    X_clean: ArrayLike
        The noise-free matrix. Must not be all zero.
    X_corrupted: ArrayLike
        The data the solvers saw. Reported under the label ``"input"`` as the do-nothing baseline.
    results: dict[str, ArrayLike]
        The reconstruction ``Z`` of each solver, by label.

    Returns
    -------
    dict[str, Any]
        ``residuals``: ``|Z - X_clean|_F / |X_clean|_F`` per label.
        ``column_residuals``: the column-wise ``|Z_j - X_clean_j|_2`` per label.
        ``spectra``: the `SpectrumReport` of all reconstructions against ``X_clean``, as a dict.
    """

    clean = as_matrix(X_clean, "X_clean")
    norm = float(np.linalg.norm(clean))
    if norm == 0.0:
        msg = "X_clean is all zero, so relative residuals are undefined."
        raise InputDomainError(msg)

    matrices: dict[str, _t.ArrayLike] = {"input": X_corrupted, **results}
    residuals: dict[str, float] = {}
    column_residuals: dict[str, list[float]] = {}
    for label, matrix in matrices.items():
        Z = as_matrix(matrix, label)
        check_same_shape(clean, Z, ("X_clean", label))
        residuals[label] = float(np.linalg.norm(Z - clean)) / norm
        column_residuals[label] = np.linalg.norm(Z - clean, axis=0).tolist()

    return {
        "residuals": residuals,
        "column_residuals": column_residuals,
        "spectra": spectrum_report(matrices, clean).to_dict(),
    }
