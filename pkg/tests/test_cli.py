from __future__ import annotations

import json
import subprocess
import sys

import pytest

from iesr.cli import build_parser, main
from iesr.harness import toy as toy_suite

COMMANDS = ("run", "eval", "perturb", "report", "costs", "extract-pr", "exec", "ex", "toy")


def _pipeline(toy, mode="all_correct"):
    return ["--dataset", str(toy["dataset"]), "--db-root", str(toy["db_root"]),
            "--config", str(toy["config"]), "--mock", str(toy[mode])]


@pytest.fixture(scope="module")
def run_dir(toy, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "run"
    assert main(["eval", *_pipeline(toy, "four_wrong"), "--run-dir", str(out)]) == 0
    return out


def test_all_subcommands_registered():
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert set(COMMANDS) <= set(sub.choices)


def test_eval_prints_ex(toy, tmp_path, capsys):
    assert main(["eval", *_pipeline(toy)]) == 0
    assert capsys.readouterr().out.strip() == "EX 100.00 (10/10)"


def test_eval_run_dir(run_dir):
    for name in ("manifest.json", "report.json", "breakdown.md", "breakdown.csv", "breakdown.json"):
        assert (run_dir / name).is_file()
    assert json.loads((run_dir / "report.json").read_text())["ex"] == 60.0


def test_run_writes_predictions(toy, tmp_path):
    out = tmp_path / "pred.json"
    assert main(["run", *_pipeline(toy), "--n-rollout", "4", "--out", str(out)]) == 0
    records = json.loads(out.read_text())
    golds = {q.qid: q.gold for q in toy_suite.QUESTIONS}
    assert [r["predicted_sql"] for r in records] == [golds[r["question_id"]] for r in records]


def test_report_and_costs(run_dir, tmp_path, capsys):
    assert main(["report", "--run-dir", str(run_dir), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "| overall | all | 6 | 10 | 60.00 |" in out
    assert (tmp_path / "breakdown.csv").is_file()
    assert main(["costs", "--run-dir", str(run_dir)]) == 0
    assert "| stage | search |" in capsys.readouterr().out


def test_extract_pr(toy, run_dir, capsys):
    assert main(["extract-pr", "--gold", str(toy["gold_extraction"]), "--run-dir", str(run_dir)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert set(result["fields"]) == {"table", "column", "unit_num", "operator"}


def test_perturb(toy, tmp_path, capsys):
    db = toy["db_root"] / "energy" / "energy.sqlite"
    out = tmp_path / "energy.sqlite"
    args = ["perturb", "--db", str(db), "--out", str(out), "--level", "l3", "--seed", "2", "--dataset", str(toy["dataset"])]
    assert main(args) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["level"] == "l3" and result["gold_checks"]
    assert all(c["unchanged"] for c in result["gold_checks"])


def test_exec(toy, capsys):
    db = toy["db_root"] / "transport" / "transport.sqlite"
    assert main(["exec", "--db", str(db), "--sql", "SELECT COUNT(*) FROM trips"]) == 0
    assert json.loads(capsys.readouterr().out)["rows"] == [[10]]
    assert main(["exec", "--db", str(db), "--sql", "DELETE FROM trips"]) == 1


def test_ex(toy, tmp_path, capsys):
    golds = json.loads(toy["dataset"].read_text())
    preds = [g["query"] for g in golds]
    preds[0] = "SELECT 1"
    pred_file = tmp_path / "p.json"
    pred_file.write_text(json.dumps(preds))
    assert main(["ex", "--pred", str(pred_file), "--gold", str(toy["dataset"]), "--db-root", str(toy["db_root"])]) == 0
    assert json.loads(capsys.readouterr().out)["ex"] == 90.0
    pred_file.write_text(json.dumps(preds[:3]))
    assert main(["ex", "--pred", str(pred_file), "--gold", str(toy["dataset"]), "--db-root", str(toy["db_root"])]) == 1


def test_toy(tmp_path, capsys):
    assert main(["toy", "--out", str(tmp_path)]) == 0
    paths = json.loads(capsys.readouterr().out)
    assert set(paths) >= {"db_root", "dataset", "all_correct", "four_wrong", "mixed"}


def test_bad_config_exit_code(toy, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": {}}')
    args = ["eval", "--dataset", str(toy["dataset"]), "--db-root", str(toy["db_root"]), "--config", str(bad)]
    assert main(args) == 2
    assert "unknown config sections" in capsys.readouterr().err


def test_console_entry_point(toy):
    out = subprocess.run([sys.executable, "-m", "iesr.cli", "eval", *_pipeline(toy)],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "EX 100.00 (10/10)"
