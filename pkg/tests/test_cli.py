import csv
import os
import subprocess
import sys

import pytest

from kppfront.cli import main


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _meta(d):
    with open(os.path.join(d, "meta.txt")) as fh:
        return dict(line.rstrip("\n").split("=", 1) for line in fh if line.strip())


@pytest.fixture(scope="module")
def simdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--t-final", "120", "--levels", "0.1,0.5,0.9", "--snapshots", "100,120",
                 "--out", str(d)]) == 0
    return d


def test_constants_csv(tmp_path):
    assert main(["constants", "--terms", "10000", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "constants.csv")
    assert rows[0][0] and len(rows) > 1
    assert "version" in _meta(tmp_path)


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("KPP_OUT_DIR", str(tmp_path / "env"))
    assert main(["outer", "--points", "11"]) == 0
    assert (tmp_path / "env" / "outer.csv").exists()


def test_out_flag_beats_env(tmp_path, monkeypatch):
    monkeypatch.setenv("KPP_OUT_DIR", str(tmp_path / "env"))
    assert main(["outer", "--points", "11", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "outer.csv").exists()
    assert not (tmp_path / "env").exists()


def test_config_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# outer grid\npoints = 7\neta-max = 4\n")
    assert main(["outer", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    rows = _rows(tmp_path / "a" / "outer.csv")
    assert len(rows) == 8 and float(rows[-1][0]) == pytest.approx(4.0)
    assert main(["outer", "--config", str(cfg), "--points", "5", "--out", str(tmp_path / "b")]) == 0
    assert len(_rows(tmp_path / "b" / "outer.csv")) == 6


def test_usage_errors(tmp_path):
    assert main(["outer", "--bogus"]) == 1
    assert main([]) == 1
    assert main(["simulate", "--t-final", "-3", "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense_key = 3\n")
    assert main(["outer", "--config", str(bad)]) == 1
    bad.write_text("no equals sign\n")
    assert main(["outer", "--config", str(bad)]) == 1


def test_io_errors(tmp_path):
    assert main(["fit", "--trace", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 3
    assert main(["outer", "--config", str(tmp_path / "missing.cfg")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["outer", "--out", str(blocker / "sub")]) == 3


def test_numerical_error_exit(tmp_path):
    assert main(["verify", "--tier", "0", "--terms", "10000", "--tamper-mu", "1.0", "--out", str(tmp_path)]) == 2
    rows = _rows(tmp_path / "verify.csv")
    assert any(r[-1] == "FAIL" for r in rows[1:])


def test_verify_passes(tmp_path):
    assert main(["verify", "--tier", "1", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "verify.csv")
    assert all(r[-1] == "pass" for r in rows[1:])


def test_simulate_outputs(simdir):
    head = _rows(simdir / "trace.csv")[0]
    assert head == ["t", "sigma_0.1", "sigma_0.5", "sigma_0.9"]
    assert _rows(simdir / "snapshot_100.csv")[0] == ["t", "x", "x_lab", "u", "v"]
    meta = _meta(simdir)
    assert meta["simulate.t_final"] == "120.0"
    assert meta["simulate.snapshots"] == "100,120"


def test_fit_compare_uapp(simdir):
    d = str(simdir)
    assert main(["fit", "--out", d, "--t-min", "20"]) == 0
    assert _rows(simdir / "fit_report.csv")[0] == ["stage", "coefficient", "value", "rms", "cond"]
    assert main(["compare", "--out", d]) == 0
    rows = _rows(simdir / "compare.csv")
    assert len(rows) == 3
    assert main(["uapp", "--out", d, "--times", "100", "--points", "21"]) == 0
    assert len(_rows(simdir / "uapp.csv")) > 1
    meta = _meta(simdir)
    assert "fit.alpha0" in meta and "simulate.h" in meta


def test_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "--t-final", "5", "--snapshots", "5", "--out", str(tmp_path / name)]) == 0
    for f in ("trace.csv", "snapshot_5.csv", "meta.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "kppfront", "outer", "--points", "3", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.strip().endswith("outer.csv")
