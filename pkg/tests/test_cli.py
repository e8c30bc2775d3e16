"""
Tests for the command-line entry point
"""

import json
import shlex
import sys

import pandas as pd
import pytest

from cli.main_command import _normalize_argv, main
from core.synthetic import make_staircase

from conftest import oracle_command


@pytest.fixture
def table(tmp_path):
    """Staircase data as a CSV file plus a prediction file of its true labels"""
    data = make_staircase(n_samples=90, seed=12)
    frame = pd.DataFrame(data.features, columns=data.schema.feature_names)
    frame["class"] = [data.schema.class_names[k] for k in data.labels]
    data_path = tmp_path / "staircase.csv"
    frame.to_csv(data_path, index=False)
    pred_path = tmp_path / "pred.csv"
    frame[["class"]].rename(columns={"class": "prediction"}).to_csv(pred_path, index=False)
    return str(data_path), str(pred_path)


def run_args(table, out, *extra):
    data_path, pred_path = table
    return ["--data", data_path, "--target", "class", "--predictions", pred_path,
            "--repeats", "2", "--out", str(out), *extra]


def test_run_is_default_command():
    assert _normalize_argv(["--data", "x.csv"]) == ["run", "--data", "x.csv"]
    assert _normalize_argv(["rank", "a.json"]) == ["rank", "a.json"]


def test_run_writes_reports(tmp_path, table, capsys):
    out = tmp_path / "out"
    assert main(run_args(table, out, "--format", "json,text", "--log-level", "WARNING")) == 0
    document = json.loads((out / "report.json").read_text())
    assert len(document["records"]) == 4
    assert document["config"]["repeats"] == 2
    assert (out / "report.txt").exists() and not (out / "report.csv").exists()
    assert "Fidelity" in capsys.readouterr().out


def test_config_file_with_flag_override(tmp_path, table):
    data_path, pred_path = table
    settings = tmp_path / "settings.json"
    settings.write_text(json.dumps({"data": data_path, "predictions": pred_path,
                                    "repeats": 5, "methods": "cortex", "formats": "json"}))
    out = tmp_path / "out"
    assert main(["run", "--config", str(settings), "--repeats", "2", "--out", str(out)]) == 0
    document = json.loads((out / "report.json").read_text())
    assert len(document["records"]) == 2
    assert {r["method"] for r in document["records"]} == {"cortex"}


def test_missing_predictor_is_usage_error(tmp_path, table, capsys):
    data_path, _ = table
    assert main(["--data", data_path, "--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert main(["run", "--colour", "red"]) == 1


def test_no_command():
    assert main([]) == 1


def test_data_error(tmp_path, table):
    data_path, pred_path = table
    assert main(["--data", data_path, "--target", "label", "--predictions", pred_path,
                 "--out", str(tmp_path)]) == 2


def test_oracle_error(tmp_path, table):
    data_path, _ = table
    failing = f"{shlex.quote(sys.executable)} -c {shlex.quote('import sys; sys.exit(5)')}"
    assert main(["--data", data_path, "--oracle-cmd", failing, "--repeats", "2",
                 "--out", str(tmp_path)]) == 3


def test_oracle_command_end_to_end(tmp_path, table):
    data_path, _ = table
    command = oracle_command("--classes", "c0,c1,c2", "--cuts", "1,2")
    out = tmp_path / "out"
    assert main(["--data", data_path, "--oracle-cmd", command, "--repeats", "2",
                 "--out", str(out), "--format", "csv"]) == 0
    frame = pd.read_csv(out / "report.csv")
    records = frame[frame["row_type"] == "record"]
    assert (records["completeness"] == 1.0).all()


def test_fit_writes_tree_and_rules(tmp_path, table, capsys):
    data_path, pred_path = table
    out = tmp_path / "tree"
    assert main(["fit", "--data", data_path, "--predictions", pred_path,
                 "--method", "dt", "--max-depth", "3", "--out", str(out)]) == 0
    assert (out / "tree.txt").read_text().startswith("x0 <= ")
    rules = json.loads((out / "rules.json").read_text())
    assert rules["classes"] == ["c0", "c1", "c2"]
    printed = capsys.readouterr().out
    assert printed == (out / "rules.txt").read_text()


def test_rank_reports(tmp_path, table, capsys):
    reports = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(run_args(table, out, "--dataset-name", name, "--format", "json")) == 0
        reports.append(str(out / "report.json"))
    capsys.readouterr()

    ranking_path = tmp_path / "ranking.json"
    assert main(["rank", *reports, "--scale", "observed", "--out", str(ranking_path)]) == 0
    ranking = json.loads(ranking_path.read_text())
    assert set(ranking["per_dataset"]) == {"first", "second"}
    assert "overall" in capsys.readouterr().out


def test_rank_rejects_non_reports(tmp_path):
    bogus = tmp_path / "bogus.json"
    bogus.write_text("[]")
    assert main(["rank", str(bogus)]) == 2


def test_report_config_runs_again(tmp_path, table):
    first = tmp_path / "first"
    assert main(run_args(table, first, "--format", "json", "--min-leaf", "2")) == 0
    document = json.loads((first / "report.json").read_text())
    echo = tmp_path / "echo.json"
    echo.write_text(json.dumps(document["config"]))

    second = tmp_path / "second"
    assert main(["run", "--config", str(echo), "--out", str(second)]) == 0
    again = json.loads((second / "report.json").read_text())
    assert again["records"] == document["records"]
    assert again["config"]["cortex_params"]["min_samples_leaf"] == 2
    assert {k: v for k, v in again["config"].items() if k != "out_dir"} == \
        {k: v for k, v in document["config"].items() if k != "out_dir"}


def test_exported_settings_reload(tmp_path, table):
    out = tmp_path / "out"
    assert main(run_args(table, out, "--format", "json", "--seed", "4")) == 0
    settings = json.loads((out / "settings.json").read_text())
    assert settings["seed"] == 4 and settings["repeats"] == 2

    again = tmp_path / "again"
    assert main(["run", "--config", str(out / "settings.json"), "--out", str(again)]) == 0
    first = json.loads((out / "report.json").read_text())
    second = json.loads((again / "report.json").read_text())
    assert first["records"] == second["records"]


def test_score_imported_rules_and_tree(tmp_path, table, capsys):
    data_path, pred_path = table
    fitted = tmp_path / "fitted"
    assert main(["fit", "--data", data_path, "--predictions", pred_path,
                 "--method", "cortex", "--out", str(fitted)]) == 0
    encoded = pd.read_csv(fitted / "encoded.csv")
    assert list(encoded.columns) == ["x0", "x1", "class"]
    capsys.readouterr()

    scores = tmp_path / "scores.json"
    assert main(["score", "--data", data_path, "--rules", str(fitted / "rules.json"),
                 "--predictions", pred_path, "--out", str(scores)]) == 0
    from_rules = capsys.readouterr().out
    assert main(["score", "--data", data_path, "--tree", str(fitted / "tree.txt"),
                 "--predictions", pred_path]) == 0
    from_tree = capsys.readouterr().out

    assert from_rules == from_tree
    assert from_rules.startswith("completeness")
    record = json.loads(scores.read_text())
    assert record["method"] == "imported"
    assert record["completeness"] == 1.0


def test_score_needs_exactly_one_source(tmp_path, table):
    data_path, _ = table
    assert main(["score", "--data", data_path]) == 1
    assert main(["score", "--data", data_path, "--rules", "r.json", "--tree", "t.txt"]) == 1


def test_score_rejects_unreadable_rules(tmp_path, table):
    data_path, _ = table
    bogus = tmp_path / "rules.json"
    bogus.write_text("not json")
    assert main(["score", "--data", data_path, "--rules", str(bogus)]) == 2
