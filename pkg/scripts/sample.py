# ruff: noqa: ERA001, T201, T203

import warnings
from pprint import pprint

import numpy as np

from outreg.bench import TimeCatcher
from outreg.datasets import LineDatasetSpec, LowRankCorruptionSpec, gen_line_dataset, gen_lowrank_corrupted
from outreg.errors import ConvergenceWarning
from outreg.metrics import normalize_max_abs, reconstruction_report, spectrum_report
from outreg.orlr import OrlrConfig, fit_orlr, l1_regression, ols_fit
from outreg.orpca import OrpcaConfig, orpca_path
from outreg.rpca import fit_rpca, l2_trace_pca


def line_example() -> None:
    X, y = gen_line_dataset(LineDatasetSpec())

    a_ols, b_ols = ols_fit(X, y)
    print(f"least squares:    a={a_ols[0]:.4f} b={b_ols:.4f}")

    for delta in (1.0, 0.5, 0.1, 0.01):
        with TimeCatcher() as tc:
            result = fit_orlr(X, y, OrlrConfig(delta))
        print(
            f"delta={delta:<5}  a={result.a[0]:.4f} b={result.b:.4f} "
            f"outliers={np.flatnonzero(result.outlier_mask).tolist()} "
            f"iterations={result.iterations} ({tc.elapsed:.4f}s)"
        )

    a_l1, b_l1 = l1_regression(X, y)
    print(f"L1 limit:         a={a_l1[0]:.4f} b={b_l1:.4f}")
    print("\n")


def pca_example() -> None:
    clean, corrupted, _ = gen_lowrank_corrupted(LowRankCorruptionSpec(100, 200, 10, corruption_frac=0.05))
    X, scale = normalize_max_abs(corrupted)

    with TimeCatcher() as tc:
        orpca = orpca_path(X, OrpcaConfig(10, 0.003))[-1]
    print(f"orpca: {orpca.iterations} final-stage iterations, {tc.elapsed:.3f}s")

    with TimeCatcher() as tc:
        rpca = fit_rpca(X)
    print(f"rpca:  rank {rpca.rank_Z}, {rpca.iterations} iterations, {tc.elapsed:.3f}s")

    l2 = l2_trace_pca(X, 1.0)

    print("=" * 40)
    report = reconstruction_report(clean / scale, X, {"orpca": orpca.Z, "rpca": rpca.Z, "l2trace": l2})
    pprint(report["residuals"])

    print("=" * 40)
    spectra = spectrum_report({"orpca": orpca.Z, "rpca": rpca.Z}, clean / scale)
    for label in spectra.labels:
        print(f"{label}: mean downshift of the top 10 = {spectra.mean_downshift(label, 10):.4f}")

    # pprint(spectra.to_dict())


def main() -> None:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        line_example()
        pca_example()


if __name__ == "__main__":
    main()
