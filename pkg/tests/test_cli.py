import csv
import json

import numpy as np
import pytest

from rankalign.cli import main
from rankalign.models import load_model

GRID = ["--c-grid", "0.25,4"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def cohort_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "cohort.csv"
    code = main([
        "generate", "--output", str(path), "--n", "60", "--m", "6",
        "--k-informative", "3", "--extras", "1", "--seed", "7",
    ])
    assert code == 0
    return path


def test_generate_writes_cohort(tmp_path, capsys):
    path = tmp_path / "c.csv"
    code, _, err = run_cli(capsys, "generate", "--output", str(path),
                           "--n", "25", "--m", "5", "--k-informative", "2",
                           "--extras", "0", "--seed", "1")
    assert code == 0
    assert "wrote" in err
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["id", "f0", "f1", "f2", "f3", "f4", "da", "label"]
    assert len(rows) == 26
    assert not (tmp_path / "c.latent.json").exists()


def test_generate_latent_sidecar(tmp_path, capsys):
    path = tmp_path / "c.csv"
    code, _, _ = run_cli(capsys, "generate", "--output", str(path),
                         "--n", "20", "--m", "4", "--k-informative", "2",
                         "--extras", "0", "--seed", "1", "--include-latent")
    assert code == 0
    doc = json.loads((tmp_path / "c.latent.json").read_text())
    assert len(doc["latent"]) == 20


def test_generate_rejects_bad_config(tmp_path, capsys):
    code, _, err = run_cli(capsys, "generate", "--output", str(tmp_path / "c.csv"),
                           "--n", "20", "--m", "3", "--k-informative", "5")
    assert code == 2
    assert "error:" in err


def test_fit_and_score(tmp_path, cohort_csv, capsys):
    model_path = tmp_path / "model.json"
    code, _, err = run_cli(capsys, "fit", "--input", str(cohort_csv),
                           "--output", str(model_path), "--method", "ranking_svm",
                           "--delta", "15", *GRID)
    assert code == 0
    assert "nonzero" in err
    model = load_model(model_path)
    assert model.method == "ranking_svm"
    assert model.intercept == 0.0
    assert model.delta_used == 15.0
    assert model.c_used in (0.25, 4.0)

    scores_path = tmp_path / "scores.csv"
    code, _, _ = run_cli(capsys, "score", "--input", str(cohort_csv),
                         "--model", str(model_path), "--output", str(scores_path))
    assert code == 0
    with open(scores_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["id", "score"]
    assert len(rows) == 61
    assert rows[1][0] == "P01"
    values = np.array([float(r[1]) for r in rows[1:]])
    assert np.isfinite(values).all()
    assert values.std() > 0


def test_fit_baseline_method(tmp_path, cohort_csv, capsys):
    model_path = tmp_path / "lin.json"
    code, _, _ = run_cli(capsys, "fit", "--input", str(cohort_csv),
                         "--output", str(model_path),
                         "--method", "linear_regression", *GRID)
    assert code == 0
    assert load_model(model_path).method == "linear_regression"


def test_fit_unsatisfiable_delta(tmp_path, cohort_csv, capsys):
    code, _, err = run_cli(capsys, "fit", "--input", str(cohort_csv),
                           "--output", str(tmp_path / "m.json"),
                           "--delta", "1000", *GRID)
    assert code == 2
    assert "error:" in err


def test_score_missing_model(tmp_path, cohort_csv, capsys):
    code, _, err = run_cli(capsys, "score", "--input", str(cohort_csv),
                           "--model", str(tmp_path / "absent.json"),
                           "--output", str(tmp_path / "s.csv"))
    assert code == 2
    assert "error:" in err


def test_evaluate_json_report(tmp_path, cohort_csv, capsys):
    out = tmp_path / "report.json"
    code, _, err = run_cli(
        capsys, "evaluate", "--input", str(cohort_csv), "--output", str(out),
        "--methods", "ranking_svm,linear_regression,raw_da",
        "--folds", "3", "--runs", "2", "--seed", "5", *GRID,
    )
    assert code == 0
    assert "records" in err
    doc = json.loads(out.read_text())
    assert len(doc["records"]) == 2 * 3
    assert doc["config_echo"]["runs"] == 2
    assert doc["config_echo"]["inner_split"] == "pair"
    assert doc["config_echo"]["c_grid"] == [0.25, 4.0]
    methods = {r["method"] for r in doc["records"]}
    assert methods == {"ranking_svm", "linear_regression", "raw_da"}


def test_evaluate_reports_are_reproducible(tmp_path, cohort_csv, capsys):
    argv = ["evaluate", "--input", str(cohort_csv),
            "--methods", "ranking_svm,raw_da",
            "--folds", "3", "--runs", "2", "--seed", "3", *GRID]
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    assert run_cli(capsys, *argv, "--output", str(a))[0] == 0
    assert run_cli(capsys, *argv, "--output", str(b))[0] == 0
    assert run_cli(capsys, *argv, "--output", str(c), "--jobs", "2")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() == c.read_bytes()


def test_evaluate_csv_and_patient_scores(tmp_path, cohort_csv, capsys):
    out = tmp_path / "report.csv"
    scores = tmp_path / "patient_scores.csv"
    code, _, _ = run_cli(
        capsys, "evaluate", "--input", str(cohort_csv), "--output", str(out),
        "--format", "csv", "--methods", "linear_regression",
        "--folds", "3", "--runs", "2", "--seed", "5",
        "--scores-csv", str(scores), *GRID,
    )
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "method"
    assert len(rows) == 1 + 2 * 2  # (linreg + raw) x 2 runs
    with open(scores, newline="") as fh:
        srows = list(csv.reader(fh))
    assert len(srows) == 1 + 2 * 2 * 60


def test_evaluate_without_label(tmp_path, cohort_csv, capsys):
    out = tmp_path / "nolabel.json"
    code, _, _ = run_cli(
        capsys, "evaluate", "--input", str(cohort_csv), "--output", str(out),
        "--label-column", "none", "--methods", "linear_regression",
        "--folds", "3", "--runs", "1", "--seed", "5", *GRID,
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert [r["method"] for r in doc["records"]] == ["linear_regression"]
    assert doc["records"][0]["auc"] is None


def test_evaluate_patient_split_flag(tmp_path, cohort_csv, capsys):
    out = tmp_path / "ps.json"
    code, _, _ = run_cli(
        capsys, "evaluate", "--input", str(cohort_csv), "--output", str(out),
        "--methods", "ranking_svm", "--folds", "3", "--runs", "1",
        "--seed", "5", "--patient-split", *GRID,
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["config_echo"]["inner_split"] == "patient"


def test_renamed_columns(tmp_path, cohort_csv, capsys):
    text = cohort_csv.read_text().splitlines()
    text[0] = text[0].replace("id,", "pid,").replace(",da,", ",vas,").replace(",label", ",outcome")
    renamed = tmp_path / "renamed.csv"
    renamed.write_text("\n".join(text) + "\n")

    model_path = tmp_path / "m.json"
    code, _, _ = run_cli(capsys, "fit", "--input", str(renamed),
                         "--output", str(model_path),
                         "--method", "linear_regression",
                         "--id-column", "pid", "--rating-column", "vas",
                         "--label-column", "outcome", *GRID)
    assert code == 0
    # same data under default names gives the identical model
    ref_path = tmp_path / "ref.json"
    run_cli(capsys, "fit", "--input", str(cohort_csv), "--output", str(ref_path),
            "--method", "linear_regression", *GRID)
    assert json.loads(model_path.read_text()) == json.loads(ref_path.read_text())


def test_sweep_delta_skips_impossible_values(tmp_path, cohort_csv, capsys):
    out = tmp_path / "sweep.json"
    code, _, err = run_cli(
        capsys, "sweep-delta", "--input", str(cohort_csv), "--output", str(out),
        "--deltas", "15,1000", "--folds", "3", "--runs", "1", "--seed", "2", *GRID,
    )
    assert code == 0
    assert "skipped" in err
    doc = json.loads(out.read_text())
    assert len(doc["errors"]) == 1
    assert doc["errors"][0]["delta"] == 1000.0
    kept = {r["delta"] for r in doc["records"] if r["method"] == "ranking_svm"}
    assert kept == {15.0}


def test_usage_errors_exit_one(tmp_path, cohort_csv, capsys):
    cases = [
        [],
        ["evaluate", "--output", str(tmp_path / "r.json")],
        ["evaluate", "--input", str(cohort_csv), "--output", str(tmp_path / "r.json"),
         "--runs", "abc"],
        ["fit", "--input", str(cohort_csv), "--output", str(tmp_path / "m.json"),
         "--method", "boosting"],
    ]
    for argv in cases:
        code, _, _ = run_cli(capsys, *argv)
        assert code == 1, argv


def test_unknown_method_in_list(tmp_path, cohort_csv, capsys):
    code, _, err = run_cli(
        capsys, "evaluate", "--input", str(cohort_csv),
        "--output", str(tmp_path / "r.json"), "--methods", "ranking_svm,boosting",
        "--folds", "3", "--runs", "1", *GRID,
    )
    assert code == 1
    assert "usage error:" in err


def test_missing_input_file(tmp_path, capsys):
    code, _, err = run_cli(capsys, "fit", "--input", str(tmp_path / "no.csv"),
                           "--output", str(tmp_path / "m.json"))
    assert code == 2
    assert "error:" in err


def test_help_exits_zero(capsys):
    assert run_cli(capsys, "--help")[0] == 0
    for sub in ("generate", "fit", "score", "evaluate", "sweep-delta"):
        assert run_cli(capsys, sub, "--help")[0] == 0
