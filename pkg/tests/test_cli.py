import csv

import numpy as np
import pytest

from dualmuscle.cli import main
from dualmuscle.config import load_config
from dualmuscle.simkit import MetricsReport, TrajectoryLog, log_columns

SHORT = ["--set", "sim.duration=2"]


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", "scenario_noisefree.cfg", "--out", str(out)] + SHORT) == 0
    log = TrajectoryLog.from_csv(out / "trajectory.csv")
    assert log.columns == log_columns(("hgo", "smo", "asmo"))
    assert len(log) == 2001
    assert "tracking.max_abs" in MetricsReport.from_text((out / "metrics.txt").read_text()).values
    manifest = (out / "manifest.txt").read_text()
    for name in ("trajectory.csv", "metrics.txt", "config.cfg", "manifest.txt"):
        assert f"= {name}" in manifest
        assert (out / name).exists()


def test_manifest_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--out", str(a), "--config", "scenario_noisy.cfg", "--seed", "5"] + SHORT) == 0
    assert main(["run", "--out", str(b), "--config", str(a / "manifest.txt")]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    assert load_config(a / "manifest.txt").noise.seed == 5


def test_step_and_observer_flags(tmp_path):
    out = tmp_path / "r"
    assert main(["run", "--out", str(out), "--step", "0.002", "--observers", "hgo"] + SHORT) == 0
    log = TrajectoryLog.from_csv(out / "trajectory.csv")
    assert log.observers == ("hgo",) and len(log) == 1001


def test_bad_gain_exits_2(tmp_path, capsys):
    code = main(["run", "--out", str(tmp_path), "--set", "observer.smo.alpha11=0.9"])
    assert code == 2
    assert "alpha11 > f_plus" in capsys.readouterr().err


def test_halt_exits_3(tmp_path, capsys):
    code = main(["run", "--out", str(tmp_path / "h"), "--set", "initial.x2=3", "--set", "sim.duration=2",
                 "--observers", "hgo"])
    assert code == 3
    err = capsys.readouterr().err
    assert "tau=" in err and "allocate" in err
    assert (tmp_path / "h" / "trajectory.csv").exists()


def test_compare_needs_two_observers(tmp_path):
    assert main(["compare", "--out", str(tmp_path), "--observers", "hgo"]) == 2


def test_compare_outputs(tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", "--out", str(out)] + SHORT) == 0
    text = capsys.readouterr().out
    assert "ordering" in text
    rows = list(csv.DictReader(open(out / "comparison.csv")))
    assert [r["observer"] for r in rows] == ["hgo", "smo", "asmo"]
    for png in ("states.png", "inputs.png", "activations.png"):
        assert (out / png).read_bytes()[:4] == b"\x89PNG"
    assert "comparison.csv" in (out / "manifest.txt").read_text()


def test_sweep_single_value_exits_2(tmp_path):
    assert main(["sweep", "--out", str(tmp_path), "--param", "observer.hgo.eps_h", "--values", "0.1"]) == 2


def test_sweep_unknown_param_exits_2(tmp_path):
    assert main(["sweep", "--out", str(tmp_path), "--param", "observer.hgo.bogus", "--values", "1,2"]) == 2


def test_seed_sweep(tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--config", "scenario_noisy.cfg", "--out", str(out), "--param", "noise.seed",
                 "--values", "1,2,3,4,5", "--jobs", "2", "--observers", "hgo", "--set", "sim.duration=1"])
    assert code == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert [r["value"] for r in rows] == ["1", "2", "3", "4", "5"]
    logs = [TrajectoryLog.from_csv(out / r["directory"] / "trajectory.csv") for r in rows]
    assert len({l["y2"].tobytes() for l in logs}) == 5
    for l in logs[1:]:
        for c in ("x1", "x2", "x3", "x4"):
            np.testing.assert_array_equal(l[c], logs[0][c])


def test_validate_reports_every_check(capsys):
    code = main(["validate"])
    lines = capsys.readouterr().out.splitlines()
    checks = [l for l in lines if l.startswith(("PASS", "FAIL"))]
    assert len(checks) >= 20
    # the published toe coefficients do not reproduce the refit curve, so
    # validate reports that one check as failed and exits nonzero
    failed = [l for l in checks if l.startswith("FAIL")]
    assert [l for l in failed if "refit vs verbatim" not in l] == []
    assert code == (1 if failed else 0)
    for name in ("alpha11 > f_plus", "lambda11 bound", "alpha2 > U1m", "alpha3 > U2m"):
        assert any(name in l and l.startswith("PASS") for l in checks)
