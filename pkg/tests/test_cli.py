import json
import subprocess
import sys

import pytest

from kppspeed.cli import read_config, resolve, run
from kppspeed.errors import ConfigError
from kppspeed.grid import read_coef_csv


def _summary(out):
    return json.loads((out / "summary.json").read_text())


def test_speed_constant(tmp_path, capsys):
    assert run(["speed", "--constant", "1", "--L", "2", "--N", "64", "--out", str(tmp_path)]) == 0
    rec = _summary(tmp_path)
    assert rec["c_star"] == pytest.approx(2.0, abs=1e-9)
    assert rec["config"]["L"] == 2.0
    assert json.loads(capsys.readouterr().out)["c_star"] == rec["c_star"]


def test_speed_step_reports_exact(tmp_path):
    assert run(["speed", "--step", "0.5,2", "--N", "1024", "--out", str(tmp_path)]) == 0
    rec = _summary(tmp_path)
    assert rec["c_star"] == pytest.approx(rec["c_star_exact"], abs=1e-6)


def test_unknown_key_reports_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nL = 2\nbogus = 3\n")
    assert run(["speed", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert f"{cfg}:3" in capsys.readouterr().err


def test_config_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("L=3  # period\n\ngap-tol=1e-4\n")
    assert read_config(cfg) == {"L": 3.0, "gap_tol": 1e-4}
    cfg.write_text("N=abc\n")
    with pytest.raises(ConfigError):
        read_config(cfg)
    with pytest.raises(ConfigError):
        read_config(tmp_path / "missing.cfg")


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("L=3\nN=64\n")
    got = resolve(["speed", "--config", str(cfg), "--L", "5"])
    assert got["L"] == 5.0 and got["N"] == 64 and got["beta"] == 1.0


@pytest.mark.parametrize("argv", [["speed", "--L", "-1"], ["nope"], ["speed", "--N", "x"],
                                  ["speed", "--constant", "1", "--step", "0.5,2"],
                                  ["maximize", "--constraint", "q:2"], ["verify", "--suite", "nothing"]])
def test_config_errors_exit_two(tmp_path, argv):
    assert run(argv + ["--out", str(tmp_path)]) == 2


def test_numerical_failure_exits_one(tmp_path):
    argv = ["simulate", "--constant", "1", "--T", "30", "--half-width", "20", "--out", str(tmp_path)]
    assert run(argv) == 1


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["maximize", "--L", "2", "--N", "64", "--seed", "7", "--out", str(out)]) == 0
    for name in ("summary.json", "coef.csv"):
        assert (a / name).read_bytes().replace(b"/a", b"/x") == (b / name).read_bytes().replace(b"/b", b"/x")


def test_coef_roundtrip(tmp_path):
    first, second = tmp_path / "1", tmp_path / "2"
    assert run(["speed", "--step", "0.3,2,0.5", "--L", "2", "--N", "128", "--out", str(first)]) == 0
    assert run(["speed", "--coef", str(first / "coef.csv"), "--out", str(second)]) == 0
    assert _summary(first)["c_star"] == _summary(second)["c_star"]
    assert read_coef_csv(first / "coef.csv").grid.L == 2.0


def test_eigen_command(tmp_path):
    assert run(["eigen", "--constant", "2", "--lam", "0.5", "--N", "64", "--out", str(tmp_path)]) == 0
    assert _summary(tmp_path)["k"] == pytest.approx(-2.25, abs=1e-10)
    assert run(["eigen", "--constant", "0", "--out", str(tmp_path)]) == 2


def test_sweep_theta_argmax_moves(tmp_path):
    res = {}
    for L in (10.0, 50.0):
        out = tmp_path / str(L)
        assert run(["sweep-theta", "--L", str(L), "--thetas", "30", "--out", str(out)]) == 0
        res[L] = _summary(out)["theta_star"]
        assert (out / "sweep.csv").exists()
    assert res[50.0] < res[10.0]


def test_sweep_L(tmp_path):
    assert run(["sweep-L", "--Ls", "1,2", "--thetas", "8", "--out", str(tmp_path)]) == 0
    assert [r["L"] for r in _summary(tmp_path)["optima"]] == [1.0, 2.0]
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 17


def test_verify_subset(tmp_path, capsys):
    assert run(["verify", "--suite", "grid,rearrange", "--n-random", "2", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert _summary(tmp_path)["all_passed"] is True


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kppspeed", "speed", "--N", "32", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["c_star"] == pytest.approx(2.0)
