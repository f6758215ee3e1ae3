import json
from pathlib import Path

import pytest

from ecnplan import cli

DEFAULT = Path(__file__).resolve().parent.parent / "configs" / "default.ini"


def test_run_skip_moea(tmp_path, capsys):
    out = tmp_path / "r"
    assert cli.main(["run", str(DEFAULT), "--out", str(out), "--skip-moea", "--x1", "2", "--x2", "5"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["single_evaluation"]["x1"] == 2 and summary["single_evaluation"]["x2"] == 5.0
    assert "x1=2" in capsys.readouterr().out


def test_stage_failure_writes_report(tmp_path):
    out = tmp_path / "f"
    assert cli.main(["run", str(DEFAULT), "--out", str(out), "--skip-moea", "--x1", "500"]) == 1
    report = json.loads((out / "failure.json").read_text())
    assert report["stage"] == "flights" and report["seed"] == 1


def test_config_errors_exit_two(tmp_path):
    assert cli.main(["run", str(tmp_path / "none.ini")]) == 2
    assert cli.main(["run", str(DEFAULT), "--replications", "0"]) == 2
    with pytest.raises(SystemExit):
        cli.main([])


def test_replications_use_subdirectories(tmp_path):
    out = tmp_path / "reps"
    assert cli.main(["run", str(DEFAULT), "--out", str(out), "--skip-moea", "--replications", "2"]) == 0
    seeds = [json.loads((out / f"rep{k:03d}" / "summary.json").read_text())["seed"] for k in range(2)]
    assert seeds[0] != seeds[1]
