import csv
import json
import subprocess
import sys

import pytest

from tcdiv import cli
from tcdiv.exceptions import AccuracyError


def run_cli(tmp_path, *args, config=None):
    argv = list(args)
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    return cli.main(argv)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_figure1_defaults(tmp_path, capsys):
    out = tmp_path / "f1.csv"
    assert run_cli(tmp_path, "figure1", "--out", str(out)) == 0
    rows = read_csv(out)
    assert len(rows) == 2 * 3 * 200 == 1200
    assert list(rows[0]) == ["min_mk", "tc", "g", "prelog"]
    assert "1200 rows" in capsys.readouterr().out
    raw = out.read_bytes()
    assert b"\r\n" not in raw


def test_default_output_path(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["figure5"]) == 0
    assert (tmp_path / "figure5.csv").exists()


def test_json_format(tmp_path):
    out = tmp_path / "f3.json"
    assert run_cli(tmp_path, "figure3", "--format", "json", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["columns"] == ["q", "f_q", "is_optimal"]
    assert doc["meta"]["m_star"] == 40
    assert doc["meta"]["m_p2_star"] > 40


def test_config_file_and_command_in_config(tmp_path):
    out = tmp_path / "cov.csv"
    cfg = {"command": "covariance", "antennas": 16, "delta_deg": 5.0,
           "output_path": str(out)}
    assert run_cli(tmp_path, config=cfg) == 0
    rows = read_csv(out)
    assert sum(float(r["eigenvalue"]) for r in rows) == pytest.approx(16.0, abs=1e-9)


def test_bounds_command(tmp_path):
    out = tmp_path / "b.csv"
    assert run_cli(tmp_path, "bounds", "--out", str(out)) == 0
    names = [r["quantity"] for r in read_csv(out)]
    assert names[0] == "highsnr_sum_capacity"
    assert "rate_gap_equal_eigen" in names


def test_figure6(tmp_path):
    out = tmp_path / "f6.json"
    assert run_cli(tmp_path, "figure6", "--format", "json", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["meta"]["ordered"] is False
    assert doc["columns"] == ["k", "regime", "dof"]


def test_validate_passes(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert run_cli(tmp_path, "validate", "--out", str(out)) == 0
    text = capsys.readouterr().out
    assert "FAIL" not in text
    assert text.count("PASS") == len(read_csv(out))


def test_validate_reports_failure(tmp_path, monkeypatch, capsys):
    import tcdiv.validation as val
    monkeypatch.setattr(val, "CHECKS", val.CHECKS + (("always_fails", lambda rng: (False, "x")),))
    monkeypatch.setattr(cli, "run_invariants", val.run_invariants)
    assert run_cli(tmp_path, "validate", "--out", str(tmp_path / "v.csv")) == 1
    assert "FAIL always_fails" in capsys.readouterr().out


@pytest.mark.parametrize("cfg", [
    {"command": "figure1", "bogus": 1},
    {"command": "figure4", "trials": 0},
    {"command": "figure4", "trials": 2.5},
    {"command": "figure3", "M": "many"},
    {"command": "nope"},
    {"command": "figure1", "format": "xml"},
    {"command": "figure6", "N1": 2, "N2": 4},
    {"command": "bounds", "M": 8, "K": 6, "G": 4},
    {"command": "figure7", "delta_min_deg": 10.0, "delta_max_deg": 5.0},
])
def test_invalid_config_exit_2(tmp_path, cfg, capsys):
    assert run_cli(tmp_path, config=cfg) == 2
    assert "invalid config" in capsys.readouterr().err


def test_unknown_field_is_named(tmp_path, capsys):
    run_cli(tmp_path, config={"command": "figure1", "bogus": 1})
    assert "bogus" in capsys.readouterr().err


def test_conflicting_command(tmp_path):
    assert run_cli(tmp_path, "figure1", config={"command": "figure5"}) == 2


def test_negative_seed(tmp_path):
    assert run_cli(tmp_path, "figure1", "--seed", "-1") == 2


def test_bad_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    assert run_cli(tmp_path, "figure1", "--out", str(tmp_path / "x.csv")) == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise AccuracyError("quadrature did not converge")

    monkeypatch.setattr(cli.ps, "figure5_dataset", boom)
    assert run_cli(tmp_path, "figure5", "--out", str(tmp_path / "x.csv")) == 3
    assert "quadrature did not converge" in capsys.readouterr().err


def test_load_config_defaults():
    cfg = cli.load_config({}, "figure4")
    assert cfg["trials"] == 1000 and cfg["seed"] == 0
    assert cfg["snr_grid_db"] == [-20, -10, 0, 10, 15, 20, 30]


def _mc_bytes(tmp_path, cmd, threads, tag, extra):
    out = tmp_path / f"{cmd}-{tag}.csv"
    cfg = dict(command=cmd, seed=7, output_path=str(out), **extra)
    assert run_cli(tmp_path, "--threads", str(threads), config=cfg) == 0
    return out.read_bytes()


@pytest.mark.parametrize("cmd,extra", [
    ("figure4", {"trials": 12, "snr_grid_db": [0, 20], "k_values": [4, 8]}),
    ("figure7", {"trials": 6, "k_grid": [32, 64]}),
])
def test_monte_carlo_byte_identical(tmp_path, cmd, extra):
    a = _mc_bytes(tmp_path, cmd, 1, "a", extra)
    b = _mc_bytes(tmp_path, cmd, 1, "b", extra)
    c = _mc_bytes(tmp_path, cmd, 8, "c", extra)
    assert a == b == c


def test_module_entry_point(tmp_path):
    out = tmp_path / "f1.csv"
    proc = subprocess.run([sys.executable, "-m", "tcdiv", "figure1", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.exists()
    assert proc.stdout.startswith("figure1: 1200 rows")
