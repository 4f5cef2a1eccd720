import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from meanval import cli
from meanval.errors import ConfigInvalid

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


SIN = {"kind": "wmv", "measure": {"type": "lebesgue", "dim": 1}, "renorm": {"type": "cubes", "dim": 1},
       "f": "sin(x0)"}


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path, capsys):
    assert cli.main(["validate", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_run_writes_report_and_history(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", _write(tmp_path, SIN), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "Converged"
    assert report["seed"] == 0 and report["exit_code"] == 0
    assert report["backend"] in ("compiled", "python")
    assert abs(report["result"]["value"]) < 1e-2
    assert (out / "history.csv").read_text().startswith("n,mu_Un,a_n_0,spread")


def test_history_is_deterministic(tmp_path):
    cfg = {"kind": "wmv", "seed": 3, "measure": {"type": "lebesgue", "dim": 3},
           "renorm": {"type": "balls", "dim": 3}, "f": "exp(-x0^2 - x1^2 - x2^2)",
           "criteria": {"eps": 1e-2, "window": 3, "n_max": 6}}
    path = _write(tmp_path, cfg)
    cli.main(["run", path, "--out", str(tmp_path / "a")])
    cli.main(["run", path, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "history.csv").read_bytes() == (tmp_path / "b" / "history.csv").read_bytes()
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_seed_override_recorded(tmp_path):
    cli.main(["run", _write(tmp_path, SIN), "--out", str(tmp_path / "o"), "--seed", "9"])
    assert json.loads((tmp_path / "o" / "report.json").read_text())["seed"] == 9


def test_malformed_json_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"kind": "wmv",')
    assert cli.main(["run", str(p)]) == 1
    assert "config_invalid" in capsys.readouterr().err


def test_schema_violation_exit_1(tmp_path, capsys):
    assert cli.main(["validate", _write(tmp_path, {"kind": "wmv", "measure": {"type": "nope"}})]) == 1
    assert "error" in capsys.readouterr().err


def test_validate_config_raises():
    with pytest.raises(ConfigInvalid):
        cli.validate_config({"kind": "unknown"})


def test_bad_expression_exit_1(tmp_path):
    cfg = dict(SIN, f="sin(x0")
    assert cli.main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1


def test_max_iterations_exit_3(tmp_path):
    cfg = dict(SIN, f="sqrt(abs(x0))", criteria={"eps": 1e-6, "window": 5, "n_max": 10})
    assert cli.main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 3


def test_mv_check_negative_exit_2(tmp_path):
    cfg = {"kind": "mv_check", "measure": {"type": "lebesgue", "dim": 2},
           "renorms": [{"type": "cubes", "dim": 2}, {"type": "balls", "dim": 2}],
           "f": "indicator(abs(x1) <= abs(x0)*0.41421356237)", "criteria": {"eps": 1e-3, "window": 5, "n_max": 60}}
    out = tmp_path / "o"
    assert cli.main(["run", _write(tmp_path, cfg), "--out", str(out)]) == 2
    assert (out / "history.csv").read_text().splitlines()[0].startswith("series,")


def test_cesaro_config(tmp_path):
    cfg = {"kind": "cesaro", "seq": "(-1)^x0", "criteria": {"eps": 1e-3, "window": 5, "n_max": 10000}}
    assert cli.main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0


def test_suite_zero_eps_fails():
    rows = cli.invariance_suite(("mixing",), eps=0.0)
    assert len(rows) == 2
    assert not all(r["pass"] for r in rows)


def test_suite_mixing_passes():
    rows = cli.invariance_suite(("mixing", "scaling"), eps=1e-3)
    assert len(rows) == 5 and all(r["pass"] for r in rows)


@pytest.mark.slow
def test_suite_hilbert_group_has_three_checks():
    rows = cli.invariance_suite(("hilbert",), eps=1e-3)
    assert [r["id"] for r in rows] == ["hilbert.scale", "hilbert.translation", "hilbert.unitary"]
    assert all(r["pass"] for r in rows)


def test_console_script(tmp_path):
    exe = shutil.which("meanval")
    cmd = [exe] if exe else [sys.executable, "-m", "meanval.cli"]
    proc = subprocess.run(cmd + ["validate", str(CONFIGS / "sin_cubes.json")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "ok"
