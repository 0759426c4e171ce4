# pyright: basic

import json

import numpy as np
import pytest

from outreg.cli import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK, main
from outreg.matrixio import read_matrix, write_matrix


def run(capsys, *argv):
    code = main([str(arg) for arg in argv])
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out else None
    return code, report, captured.err


@pytest.fixture
def planted(tmp_path):
    x = np.linspace(0.0, 1.0, 13)
    y = x + 0.5
    y[[3, 6, 9]] += [3.0, -2.5, 4.0]
    write_matrix(tmp_path / "x.csv", x.reshape(1, -1))
    write_matrix(tmp_path / "y.csv", y)
    return tmp_path / "x.csv", tmp_path / "y.csv"


class TestGen:
    def test_line_is_reproducible(self, tmp_path, capsys):
        outputs = []
        for name in ("a", "b"):
            code, report, _ = run(
                capsys,
                "--report",
                tmp_path / f"{name}.json",
                "gen",
                "line",
                "--out-x",
                tmp_path / f"{name}_x.csv",
                "--out-y",
                tmp_path / f"{name}_y.csv",
            )
            assert code == EXIT_OK
            assert report is None
            outputs.append([(tmp_path / f"{name}{suffix}").read_bytes() for suffix in (".json", "_x.csv", "_y.csv")])
        assert outputs[0] == outputs[1]
        assert json.loads(outputs[0][0])["seed"] == 0

    def test_lowrank_with_spec(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"p": 10, "n": 8, "k_true": 2, "corruption_frac": 0.25, "seed": 3}))
        code, report, _ = run(
            capsys, "gen", "lowrank", "--spec", spec, "--out-x", tmp_path / "x.csv", "--out-mask", tmp_path / "m.csv"
        )
        assert code == EXIT_OK
        assert report["num_corrupted"] == 20
        assert read_matrix(tmp_path / "m.csv").sum() == 20
        assert read_matrix(tmp_path / "x.csv").shape == (10, 8)

    def test_unknown_spec_field(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"slopes": 2.0}))
        code, _, err = run(capsys, "gen", "line", "--spec", spec)
        assert code == EXIT_INPUT
        assert "slopes" in err


class TestOrlr:
    def test_flags_the_planted_outliers(self, planted, tmp_path, capsys):
        x_path, y_path = planted
        code, report, _ = run(capsys, "orlr", "--x", x_path, "--y", y_path, "--delta", 0.5, "--out", tmp_path / "z.csv")
        assert code == EXIT_OK
        assert report["converged"] is True
        assert report["outliers"] == [3, 6, 9]
        assert report["config"] == {"delta": 0.5, "max_iters": 200, "tol": 1e-10}
        assert read_matrix(tmp_path / "z.csv").shape == (1, 13)

    def test_iteration_cap_still_writes(self, planted, tmp_path, capsys):
        x_path, y_path = planted
        out = tmp_path / "z.csv"
        code, report, _ = run(
            capsys, "orlr", "--x", x_path, "--y", y_path, "--delta", 0.01, "--max-iters", 1, "--out", out
        )
        assert code == EXIT_NOT_CONVERGED
        assert report["converged"] is False
        assert out.exists()

    def test_bad_csv(self, tmp_path, capsys):
        (tmp_path / "x.csv").write_text("0,1,oops\n")
        (tmp_path / "y.csv").write_text("1,2,3\n")
        code, report, err = run(capsys, "orlr", "--x", tmp_path / "x.csv", "--y", tmp_path / "y.csv", "--delta", 1)
        assert code == EXIT_INPUT
        assert report is None
        assert "^^^^" in err
        assert "Column 3 is not a number" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "orlr", "--x", tmp_path / "nope.csv", "--y", tmp_path / "nope.csv", "--delta", 1)
        assert code == EXIT_INPUT
        assert err.startswith("outreg: error:")

    def test_bad_delta(self, planted, capsys):
        x_path, y_path = planted
        code, _, _ = run(capsys, "orlr", "--x", x_path, "--y", y_path, "--delta", -1)
        assert code == EXIT_INPUT


class TestRegularize:
    def test_writes_outputs(self, tmp_path, capsys):
        write_matrix(tmp_path / "x.csv", [[0.0, 5.0], [-4.0, 1.1]])
        write_matrix(tmp_path / "f.csv", [[0.0, 1.0], [0.0, 1.0]])
        code, report, _ = run(
            capsys,
            "regularize",
            "--x",
            tmp_path / "x.csv",
            "--f",
            tmp_path / "f.csv",
            "--delta",
            0.5,
            "--out",
            tmp_path / "z.csv",
            "--mask-out",
            tmp_path / "m.csv",
        )
        assert code == EXIT_OK
        assert report["num_outliers"] == 2
        assert read_matrix(tmp_path / "z.csv").tolist() == [[0.0, 1.5], [-0.5, 1.1]]
        assert read_matrix(tmp_path / "m.csv").tolist() == [[0.0, 1.0], [1.0, 0.0]]

    def test_shape_mismatch(self, tmp_path, capsys):
        write_matrix(tmp_path / "x.csv", np.ones((2, 2)))
        write_matrix(tmp_path / "f.csv", np.ones((2, 3)))
        code, _, _ = run(capsys, "regularize", "--x", tmp_path / "x.csv", "--f", tmp_path / "f.csv", "--delta", 1)
        assert code == EXIT_INPUT


class TestPca:
    def test_orpca_on_exact_low_rank(self, tmp_path, capsys):
        X = np.outer([1.0, 2.0, -1.0, 0.5, 3.0, 1.5], [1.0, -0.5, 2.0, 0.25, 1.0])
        write_matrix(tmp_path / "x.csv", X)
        code, report, _ = run(
            capsys, "orpca", "--x", tmp_path / "x.csv", "--rank", 1, "--delta", 0.01, "--out-z", tmp_path / "z.csv"
        )
        assert code == EXIT_OK
        assert report["scale"] == 6.0
        assert report["outlier_fraction"] == 0.0
        assert np.allclose(read_matrix(tmp_path / "z.csv"), X, atol=1e-10)

    @pytest.mark.filterwarnings("ignore::outreg.errors.ConvergenceWarning")
    def test_orpca_continuation_is_the_default(self, tmp_path, capsys):
        X = np.outer([1.0, 2.0, -1.0, 0.5, 3.0, 1.5], [1.0, -0.5, 2.0, 0.25, 1.0])
        X[2, 3] += 8.0
        write_matrix(tmp_path / "x.csv", X)

        _, report, _ = run(capsys, "orpca", "--x", tmp_path / "x.csv", "--rank", 1, "--delta", 0.01)
        assert report["config"]["continuation"] is True
        deltas = [stage["delta"] for stage in report["stages"]]
        assert len(deltas) > 1
        assert deltas[-1] == pytest.approx(0.01)
        assert all(isinstance(stage["converged"], bool) for stage in report["stages"])

        _, report, _ = run(
            capsys, "orpca", "--x", tmp_path / "x.csv", "--rank", 1, "--delta", 0.01, "--no-continuation"
        )
        assert report["config"]["continuation"] is False
        assert report["stages"] == []

    def test_l1pca_on_exact_low_rank(self, tmp_path, capsys):
        X = np.outer([1.0, 2.0, -1.0, 0.5], [1.0, -0.5, 2.0])
        write_matrix(tmp_path / "x.csv", X)
        code, report, _ = run(capsys, "l1pca", "--x", tmp_path / "x.csv", "--rank", 1)
        assert code == EXIT_OK
        assert report["l1_error"] < 1e-9

    def test_rpca_keeps_rank_one_data(self, tmp_path, capsys):
        X = np.outer(np.linspace(1.0, 2.0, 5), np.linspace(-1.0, 1.0, 6))
        write_matrix(tmp_path / "x.csv", X)
        code, report, _ = run(
            capsys,
            "rpca",
            "--x",
            tmp_path / "x.csv",
            "--beta",
            0.01,
            "--no-normalize",
            "--out-z",
            tmp_path / "z.csv",
        )
        assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
        assert report["config"]["beta"] == 0.01
        assert report["scale"] == 1.0
        assert report["dual_residual"] >= 0.0
        assert np.allclose(read_matrix(tmp_path / "z.csv"), X, atol=1e-6)

    def test_l2trace(self, tmp_path, capsys):
        write_matrix(tmp_path / "x.csv", np.diag([3.0, 1.0]))
        x_path, z_path = tmp_path / "x.csv", tmp_path / "z.csv"
        code, report, _ = run(capsys, "l2trace", "--x", x_path, "--beta", 2.0, "--out-z", z_path)
        assert code == EXIT_OK
        assert report["rank_Z"] == 1
        assert report["nuclear_norm_Z"] == pytest.approx(1.0)
        assert read_matrix(z_path) == pytest.approx(np.diag([1.0, 0.0]))


class TestReports:
    def test_spectrum(self, tmp_path, capsys):
        write_matrix(tmp_path / "x.csv", np.diag([1.0, 3.0]))
        write_matrix(tmp_path / "r.csv", np.diag([2.0, 4.0]))
        code, report, _ = run(capsys, "spectrum", "--x", tmp_path / "x.csv", "--reference", tmp_path / "r.csv")
        assert code == EXIT_OK
        assert report["singular_values"] == pytest.approx([3.0, 1.0])
        assert report["report"]["downshift"]["x"] == pytest.approx([1.0, 1.0])

    def test_report(self, tmp_path, capsys):
        write_matrix(tmp_path / "clean.csv", np.eye(2))
        write_matrix(tmp_path / "x.csv", 2.0 * np.eye(2))
        write_matrix(tmp_path / "z.csv", np.eye(2))
        z_arg = f"good={tmp_path / 'z.csv'}"
        code, report, _ = run(
            capsys, "report", "--clean", tmp_path / "clean.csv", "--x", tmp_path / "x.csv", "--z", z_arg
        )
        assert code == EXIT_OK
        assert report["residuals"] == pytest.approx({"input": 1.0, "good": 0.0})

    def test_report_rejects_unlabelled(self, tmp_path, capsys):
        write_matrix(tmp_path / "clean.csv", np.eye(2))
        clean = tmp_path / "clean.csv"
        code, _, err = run(capsys, "report", "--clean", clean, "--x", clean, "--z", clean)
        assert code == EXIT_INPUT
        assert "LABEL=PATH" in err

    def test_bench(self, tmp_path, capsys):
        config = tmp_path / "bench.json"
        config.write_text(json.dumps({"dims": [[6, 8]], "k_true": 1, "rank": 1, "repetitions": 3}))
        code, report, _ = run(capsys, "bench", "--config", config)
        assert code == EXIT_OK
        assert report["command"] == "bench"
        assert len(report["entries"]) == 1
        assert report["entries"][0]["orpca"]["repetitions"] == 3


def test_requires_a_subcommand(capsys):
    with pytest.raises(SystemExit):
        main([])
    capsys.readouterr()
