"""Command-line entry point.

Every subcommand reads CSV matrices, runs one operation, writes any requested CSV outputs, and prints a JSON report
(sorted keys) that echoes the resolved configuration. Exit codes: 0 on success, 2 on bad input, 3 when a solver hit
its iteration cap (its best iterate is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

import numpy as np

from . import _typing_compat as _t
from .bench import BenchConfig, run_bench
from .datasets import LineDatasetSpec, LowRankCorruptionSpec, gen_line_dataset, gen_lowrank_corrupted
from .errors import ConvergenceWarning, MatrixParseError, OutregError
from .matrixio import read_matrix, read_vector, write_matrix
from .metrics import normalize_max_abs, numerical_rank, reconstruction_report, spectrum, spectrum_report
from .orlr import OrlrConfig, fit_orlr
from .orpca import OrpcaConfig, fit_orpca, l1_pca, orpca_path
from .proxreg import regularize_matrix
from .rpca import RpcaConfig, fit_rpca, l2_trace_pca, nuclear_norm


__all__ = ("EXIT_OK", "EXIT_INPUT", "EXIT_NOT_CONVERGED", "build_parser", "main")


log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3


# region ---- Helpers ----


def _emit(report: dict[str, _t.Any], path: _t.Optional[str]) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fp:
            fp.write(text)


def _load_json(path: str) -> _t.Any:
    with open(path, encoding="utf-8") as fp:
        return json.load(fp)


def _maybe_write(path: _t.Optional[str], M: _t.ArrayLike) -> None:
    if path is not None:
        write_matrix(path, M)


def _normalized(X: _t.FloatArray, enabled: bool) -> tuple[_t.FloatArray, float]:
    if not enabled:
        return X, 1.0
    return normalize_max_abs(X)


def _status(converged: bool) -> int:
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


# endregion


# region ---- Subcommands ----


def _cmd_regularize(args: argparse.Namespace) -> int:
    outcome = regularize_matrix(read_matrix(args.x), read_matrix(args.f), args.delta)
    _maybe_write(args.out, outcome.regularized)
    _maybe_write(args.mask_out, outcome.outlier_mask.astype(np.float64))
    _emit(
        {
            "command": "regularize",
            "config": {"delta": args.delta},
            "shape": list(outcome.regularized.shape),
            "num_outliers": outcome.num_outliers,
        },
        args.report,
    )
    return EXIT_OK


def _cmd_orlr(args: argparse.Namespace) -> int:
    config = OrlrConfig(args.delta, max_iters=args.max_iters, tol=args.tol)
    result = fit_orlr(read_matrix(args.x), read_vector(args.y), config)
    _maybe_write(args.out, result.y_tilde)
    _emit(
        {
            "command": "orlr",
            "config": config.to_dict(),
            "a": result.a.tolist(),
            "b": result.b,
            "num_outliers": result.num_outliers,
            "outliers": np.flatnonzero(result.outlier_mask).tolist(),
            "iterations": result.iterations,
            "converged": result.converged,
            "objective_trace": result.objective_trace,
        },
        args.report,
    )
    return _status(result.converged)


def _cmd_orpca(args: argparse.Namespace) -> int:
    X, scale = _normalized(read_matrix(args.x), args.normalize)
    config = OrpcaConfig(args.rank, args.delta, max_iters=args.max_iters, tol=args.tol, center=args.center)
    if args.continuation:
        path = orpca_path(X, config)
        result = path[-1]
        stages = [
            {"delta": stage.delta, "iterations": stage.iterations, "converged": stage.converged} for stage in path
        ]
    else:
        result = fit_orpca(X, config)
        stages = []

    _maybe_write(args.out_z, result.Z * scale)
    _maybe_write(args.out_u, result.U * scale)
    _maybe_write(args.out_v, result.V)
    _maybe_write(args.out_mask, result.outlier_mask.astype(np.float64))
    _emit(
        {
            "command": "orpca",
            "config": {**config.to_dict(), "normalize": args.normalize, "continuation": args.continuation},
            "scale": scale,
            "outlier_fraction": result.outlier_fraction,
            "iterations": result.iterations,
            "converged": result.converged,
            "numerical_rank_Z": numerical_rank(result.Z),
            "objective_trace": result.objective_trace,
            "stages": stages,
        },
        args.report,
    )
    return _status(result.converged)


def _cmd_l1pca(args: argparse.Namespace) -> int:
    X, scale = _normalized(read_matrix(args.x), args.normalize)
    U, V = l1_pca(X, args.rank, max_iters=args.max_iters, tol=args.tol, polish_sweeps=args.polish_sweeps)
    _maybe_write(args.out_u, U * scale)
    _maybe_write(args.out_v, V)
    _emit(
        {
            "command": "l1pca",
            "config": {
                "rank_k": args.rank,
                "max_iters": args.max_iters,
                "tol": args.tol,
                "polish_sweeps": args.polish_sweeps,
                "normalize": args.normalize,
            },
            "scale": scale,
            "l1_error": float(np.sum(np.abs(X - U @ V))) * scale,
        },
        args.report,
    )
    return EXIT_OK


def _cmd_rpca(args: argparse.Namespace) -> int:
    X, scale = _normalized(read_matrix(args.x), args.normalize)
    config = RpcaConfig(beta=args.beta, max_iters=args.max_iters, tol=args.tol)
    result = fit_rpca(X, config)
    _maybe_write(args.out_z, result.Z * scale)
    _maybe_write(args.out_s, result.S * scale)
    _emit(
        {
            "command": "rpca",
            "config": {**config.to_dict(), "beta": result.beta, "normalize": args.normalize},
            "scale": scale,
            "rank_Z": result.rank_Z,
            "iterations": result.iterations,
            "converged": result.converged,
            "primal_residual": result.primal_residual,
            "dual_residual": result.dual_residual,
            "objective_trace": result.objective_trace,
        },
        args.report,
    )
    return _status(result.converged)


def _cmd_l2trace(args: argparse.Namespace) -> int:
    X = read_matrix(args.x)
    Z = l2_trace_pca(X, args.beta)
    _maybe_write(args.out_z, Z)
    _emit(
        {
            "command": "l2trace",
            "config": {"beta": args.beta},
            "rank_Z": numerical_rank(Z),
            "nuclear_norm_Z": nuclear_norm(Z),
        },
        args.report,
    )
    return EXIT_OK


def _cmd_gen(args: argparse.Namespace) -> int:
    data = _load_json(args.spec) if args.spec is not None else {}
    if args.kind == "line":
        line_spec = LineDatasetSpec.from_dict(data)
        X, y = gen_line_dataset(line_spec)
        _maybe_write(args.out_x, X)
        _maybe_write(args.out_y, y)
        _emit({"command": "gen", "kind": "line", "config": line_spec.to_dict(), "seed": line_spec.seed}, args.report)
    else:
        lowrank_spec = LowRankCorruptionSpec.from_dict(data)
        X_clean, X_corrupted, mask = gen_lowrank_corrupted(lowrank_spec)
        _maybe_write(args.out_clean, X_clean)
        _maybe_write(args.out_x, X_corrupted)
        _maybe_write(args.out_mask, mask.astype(np.float64))
        _emit(
            {
                "command": "gen",
                "kind": "lowrank",
                "config": lowrank_spec.to_dict(),
                "seed": lowrank_spec.seed,
                "num_corrupted": int(np.count_nonzero(mask)),
            },
            args.report,
        )
    return EXIT_OK


def _cmd_spectrum(args: argparse.Namespace) -> int:
    M = read_matrix(args.x)
    report: dict[str, _t.Any] = {"command": "spectrum", "singular_values": spectrum(M).tolist()}
    if args.reference is not None:
        report["report"] = spectrum_report({"x": M}, read_matrix(args.reference)).to_dict()
    _emit(report, args.report)
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    config = BenchConfig.from_dict(_load_json(args.config)) if args.config is not None else BenchConfig()
    report = run_bench(config)
    _emit({"command": "bench", **report.to_dict()}, args.report)
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    results: dict[str, _t.Any] = {}
    for item in args.z:
        label, sep, path = item.partition("=")
        if not sep or not label:
            msg = f"Expected LABEL=PATH, got {item!r}."
            raise OutregError(msg)
        results[label] = read_matrix(path)
    report = reconstruction_report(read_matrix(args.clean), read_matrix(args.x), results)
    _emit({"command": "report", **report}, args.report)
    return EXIT_OK


# endregion


def _add_solver_options(parser: argparse.ArgumentParser, max_iters: int) -> None:
    parser.add_argument("--max-iters", type=int, default=max_iters, help="Iteration cap.")
    parser.add_argument("--tol", type=float, default=1e-10, help="Stopping tolerance.")


def _add_normalize_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--no-normalize",
        dest="normalize",
        action="store_false",
        help="Solve on the raw data instead of the data scaled to max-abs 1.",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="outreg", description="Outlier regularization for regression and PCA.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Log solver progress (repeat for more).")
    parser.add_argument("--report", help="Write the JSON report here instead of to stdout.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regularize", help="Regularize a matrix against its prediction.")
    p.add_argument("--x", required=True, help="The measurements (CSV).")
    p.add_argument("--f", required=True, help="The predictions (CSV).")
    p.add_argument("--delta", type=float, required=True, help="The outlier tolerance.")
    p.add_argument("--out", help="Where to write the regularized matrix.")
    p.add_argument("--mask-out", help="Where to write the outlier mask (1 for outliers).")
    p.set_defaults(handler=_cmd_regularize)

    p = sub.add_parser("orlr", help="Outlier-regularized linear regression.")
    p.add_argument("--x", required=True, help="The p x n design (CSV, one sample per column).")
    p.add_argument("--y", required=True, help="The n targets (CSV row or column).")
    p.add_argument("--delta", type=float, required=True, help="The outlier tolerance.")
    p.add_argument("--out", help="Where to write the regularized targets.")
    _add_solver_options(p, 200)
    p.set_defaults(handler=_cmd_orlr)

    p = sub.add_parser("orpca", help="Outlier-regularized PCA.")
    p.add_argument("--x", required=True, help="The data (CSV).")
    p.add_argument("--rank", type=int, required=True, help="The rank k.")
    p.add_argument("--delta", type=float, default=0.003, help="The outlier tolerance, in normalized units.")
    p.add_argument(
        "--continuation",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Reach delta through a decreasing schedule starting at the PCA residual scale.",
    )
    p.add_argument("--center", action="store_true", help="Subtract the row means first.")
    p.add_argument("--out-z", help="Where to write Z.")
    p.add_argument("--out-u", help="Where to write U.")
    p.add_argument("--out-v", help="Where to write V.")
    p.add_argument("--out-mask", help="Where to write the outlier mask.")
    _add_solver_options(p, 500)
    _add_normalize_option(p)
    p.set_defaults(handler=_cmd_orpca)

    p = sub.add_parser("l1pca", help="Fixed-rank L1 PCA by tolerance continuation.")
    p.add_argument("--x", required=True, help="The data (CSV).")
    p.add_argument("--rank", type=int, required=True, help="The rank k.")
    p.add_argument(
        "--polish-sweeps", type=int, default=100, help="Cap on coordinate-descent sweeps after continuation."
    )
    p.add_argument("--out-u", help="Where to write U.")
    p.add_argument("--out-v", help="Where to write V.")
    _add_solver_options(p, 500)
    _add_normalize_option(p)
    p.set_defaults(handler=_cmd_l1pca)

    p = sub.add_parser("rpca", help="Robust PCA by convex relaxation.")
    p.add_argument("--x", required=True, help="The data (CSV).")
    p.add_argument("--beta", type=float, help="The trace-norm weight. Defaults to sqrt(max(p, n)).")
    p.add_argument("--out-z", help="Where to write the low-rank part.")
    p.add_argument("--out-s", help="Where to write the sparse part.")
    _add_solver_options(p, 1000)
    _add_normalize_option(p)
    p.set_defaults(handler=_cmd_rpca)

    p = sub.add_parser("l2trace", help="Closed-form trace-norm PCA with a squared Frobenius loss.")
    p.add_argument("--x", required=True, help="The data (CSV).")
    p.add_argument("--beta", type=float, required=True, help="The singular-value threshold.")
    p.add_argument("--out-z", help="Where to write Z.")
    p.set_defaults(handler=_cmd_l2trace)

    p = sub.add_parser("gen", help="Generate a seeded synthetic dataset.")
    p.add_argument("kind", choices=("line", "lowrank"), help="The dataset family.")
    p.add_argument("--spec", help="A JSON spec. Defaults apply to omitted fields.")
    p.add_argument("--out-x", help="Where to write the design (line) or the corrupted matrix (lowrank).")
    p.add_argument("--out-y", help="Where to write the targets (line).")
    p.add_argument("--out-clean", help="Where to write the clean matrix (lowrank).")
    p.add_argument("--out-mask", help="Where to write the corruption mask (lowrank).")
    p.set_defaults(handler=_cmd_gen)

    p = sub.add_parser("spectrum", help="Singular values of a matrix.")
    p.add_argument("--x", required=True, help="The matrix (CSV).")
    p.add_argument("--reference", help="A same-shape reference for downshifts.")
    p.set_defaults(handler=_cmd_spectrum)

    p = sub.add_parser("bench", help="Time ORPCA against robust PCA.")
    p.add_argument("--config", help="A JSON bench configuration.")
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser("report", help="Residuals and spectra of reconstructions against the clean matrix.")
    p.add_argument("--clean", required=True, help="The clean matrix (CSV).")
    p.add_argument("--x", required=True, help="The corrupted matrix the solvers saw (CSV).")
    p.add_argument("--z", action="append", default=[], metavar="LABEL=PATH", help="A reconstruction (repeatable).")
    p.set_defaults(handler=_cmd_report)

    return parser


def main(argv: _t.Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    if args.verbose:
        logging.basicConfig(
            level=logging.DEBUG if args.verbose > 1 else logging.INFO,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
    log.debug("running %s with %r", args.command, vars(args))

    try:
        with warnings.catch_warnings():
            # Non-convergence is reported through the exit code.
            warnings.simplefilter("ignore", ConvergenceWarning)
            return args.handler(args)
    except (OutregError, OSError, ValueError, TypeError) as exc:
        if isinstance(exc, MatrixParseError):
            sys.stderr.write(f"{exc}\n")
        else:
            sys.stderr.write(f"outreg: error: {exc}\n")
        return EXIT_INPUT
