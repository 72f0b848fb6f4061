import json
import os
import shutil
import subprocess
import sys

import pytest

from lame_spectra.cli import main


def test_builtins_listing(capsys):
    assert main(["builtins"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 5
    assert out[0].startswith("ex_d1: kind=D1")
    assert "tangential" in out[1]


def test_malformed_config_exits_2_without_artifacts(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[domain]\nbogus = 1\n")
    out = tmp_path / "out"
    assert main(["eig", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


@pytest.mark.parametrize("argv", [
    ["eig", "--out", "x"],
    ["experiment", "--out", "x"],
    ["frobnicate"],
    ["eig", "--config", "ex_d1", "--out", "x", "--tol", "-1"],
    ["experiment", "--experiment", "nope", "--out", "x"],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    assert not (tmp_path / "x").exists()


def test_mesh_and_assemble(tmp_path):
    assert main(["mesh", "--config", "ex_d3", "--out", str(tmp_path)]) == 0
    head = (tmp_path / "mesh.txt").read_text().splitlines()[0]
    assert head.startswith("# config_sha256 ")
    assert main(["assemble", "--config", "ex_d2", "--out", str(tmp_path)]) == 0
    for name in ("A.coo", "B.coo", "P.coo"):
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0] == "# shape 144 144"
        assert lines[1].startswith("# config_sha256 ")


def test_eig_writes_spectrum(tmp_path):
    assert main(["eig", "--config", "ex_d2", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[1] == "re,im,residual,cluster_id,alg_mult,chain_len"
    assert len(lines) == 2 + 144


def test_eig_on_empty_pencil(tmp_path):
    cfg = tmp_path / "zero.ini"
    cfg.write_text("[domain]\ngeometry = square\nn = 1\ns = all\n[factorization]\nkind = D2\n")
    out = tmp_path / "out"
    assert main(["eig", "--config", str(cfg), "--out", str(out)]) == 0
    assert len((out / "spectrum.csv").read_text().splitlines()) == 2


def test_sector_command(tmp_path):
    assert main(["sector", "--config", "ex_d2", "--out", str(tmp_path)]) == 0
    info = json.loads((tmp_path / "sector.json").read_text())
    assert info["verdict"] == "PASS"
    assert 0 < info["M"] < 1
    assert info["completeness_threshold"] == pytest.approx(1.0)


def test_sweep_experiment_on_builtin(tmp_path):
    assert main(["experiment", "--experiment", "exp_sector_sweep", "--config", "ex_d1", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "exp_sector_sweep.json").read_text())
    assert data["verdict"] == "PASS"
    assert data["parameters"]["problem"] == "ex_d1"


def test_numerical_failure_exit_1(tmp_path):
    out = tmp_path / "o"
    assert main(["eig", "--config", "ex_d1", "--out", str(out), "--max-iter", "1"]) == 1
    diag = json.loads((out / "error.json").read_text())
    assert diag["error"] == "NO_CONVERGENCE"
    assert len(diag["config_sha256"]) == 64


def test_experiment_fail_exit_1(tmp_path, monkeypatch):
    from lame_spectra import experiments as E

    monkeypatch.setitem(E.EXPERIMENTS, "exp_positivity", lambda: E.ExperimentReport("exp_positivity", {}, verdict="FAIL"))
    assert main(["experiment", "--experiment", "exp_positivity", "--out", str(tmp_path)]) == 1
    assert (tmp_path / "exp_positivity.json").exists()


def test_rerun_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["eig", "--config", "ex_d3", "--out", str(tmp_path / d), "--seed", "0"]) == 0
    assert (tmp_path / "a" / "spectrum.csv").read_bytes() == (tmp_path / "b" / "spectrum.csv").read_bytes()


@pytest.mark.skipif(shutil.which("lame-spectra") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["lame-spectra", "builtins"], capture_output=True, text=True)
    assert r.returncode == 0 and "example2" in r.stdout


def test_module_entry_point(tmp_path):
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "lame_spectra.cli", "mesh", "--config", "example2", "--out", str(tmp_path)],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "mesh.txt").exists()
