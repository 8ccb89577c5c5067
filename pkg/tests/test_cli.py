import json
import subprocess
import sys

import numpy as np
import pytest

from qgpes.cli import main
from qgpes.core import read_dataset


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def data_file(tmp_path):
    path = tmp_path / "d.csv"
    assert run("synth", "--out", path, "--n", 120, "--seed", 3) == 0
    return path


def optimize(tmp_path, data_file, *extra, tag="a"):
    model, trace = tmp_path / f"{tag}.json", tmp_path / f"{tag}.csv"
    code = run("optimize", "--data", data_file, "--train-n", 30, "--bo-init", 4,
               "--bo-iters", 3, "--seed", 1, "--model-out", model, "--trace-out", trace, *extra)
    return code, model, trace


def test_synth_header(data_file):
    assert data_file.read_text().splitlines()[0] == "x1,x2,x3,x4,x5,x6,energy"
    assert len(read_dataset(data_file)) == 120


def test_optimize_outputs(tmp_path, data_file, capsys):
    code, model, trace = optimize(tmp_path, data_file)
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    echo = json.loads(out[0])
    assert echo["command"] == "optimize" and echo["train_n"] == 30
    body = trace.read_text().splitlines()
    assert len(body) == 2 + 7
    assert json.loads(model.read_text())["meta"]["rmse"] > 0


def test_rbf_trace_has_one_theta(tmp_path, data_file):
    code, _, trace = optimize(tmp_path, data_file, "--kernel", "rbf")
    assert code == 0
    assert trace.read_text().splitlines()[1] == "iter,theta_1,objective,lml,best_so_far"


def test_evaluate_matches_optimize(tmp_path, data_file, capsys):
    _, model, _ = optimize(tmp_path, data_file)
    expected = json.loads(model.read_text())["meta"]["rmse"]
    capsys.readouterr()
    assert run("evaluate", "--model", model, "--data", data_file) == 0
    lines = dict(l.split(" ", 1) for l in capsys.readouterr().out.splitlines()[1:])
    assert int(lines["n"]) == 90
    assert abs(float(lines["rmse"]) - expected) <= 1e-9 * expected


def test_predict_at_training_point(tmp_path, data_file, capsys):
    _, model, _ = optimize(tmp_path, data_file)
    doc = json.loads(model.read_text())
    x = doc["X_train"][0]
    data = read_dataset(data_file)
    row = int(np.flatnonzero((data.X == x).all(axis=1))[0])
    capsys.readouterr()
    assert run("predict", "--model", model, "--x", ",".join(map(repr, x))) == 0
    out = dict(l.split(" ", 1) for l in capsys.readouterr().out.splitlines()[1:])
    assert abs(float(out["mean"]) - data.y[row]) < 1e-6 * data.y[row]


def test_kernel_command(capsys):
    assert run("kernel", "--x", "0.0", "--xp", "1.5707963267948966", "--theta", "1",
               "--kind", "unentangled", "--shots", 100) == 0
    out = capsys.readouterr().out.splitlines()
    assert float(out[1].split()[1]) < 1e-12
    assert out[2].endswith(" 0.0")


def test_trace_command(tmp_path, data_file, capsys):
    _, _, trace = optimize(tmp_path, data_file)
    capsys.readouterr()
    assert run("trace", "--trace", trace, "--curve") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "evaluations 7 (init 4)"


@pytest.mark.parametrize("args", [
    ["synth", "--out", "x.csv", "--n", "0"],
    ["optimize", "--data", "d.csv"],
    ["kernel", "--x", "1,a", "--xp", "1,2", "--theta", "1,1,1"],
    ["kernel", "--x", "1,2", "--xp", "1,2", "--theta", "1,1"],
    ["nonsense"],
])
def test_usage_errors_exit_1(args, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        code = main(args)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_data_errors_exit_2(tmp_path, data_file):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert optimize(tmp_path, bad)[0] == 2
    assert optimize(tmp_path, data_file, "--energy-max", "-5")[0] == 2
    assert run("evaluate", "--model", tmp_path / "missing.json", "--data", data_file) == 2


def test_threads_env(tmp_path, data_file, monkeypatch):
    monkeypatch.setenv("QGP_THREADS", "x")
    assert optimize(tmp_path, data_file)[0] == 1
    monkeypatch.setenv("QGP_THREADS", "1")
    assert optimize(tmp_path, data_file)[0] == 0


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.csv"
    proc = subprocess.run([sys.executable, "-m", "qgpes", "synth", "--out", str(out),
                           "--n", "5"], capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()
