import json
import subprocess
import sys

import numpy as np
import pytest

from liouskin.artifacts import read_trace_csv
from liouskin.cli import main
from liouskin.experiments import EXPERIMENTS

SMALL = ["--set", "L=21", "--set", "t_max=3", "--set", "grid.points=7"]


def _manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in EXPERIMENTS:
        assert name in out


def test_unknown_experiment_exit_code(tmp_path, capsys):
    assert main(["run", "fig42", "--out", str(tmp_path)]) == 2
    assert "unknown experiment" in capsys.readouterr().err


def test_bad_override_exit_code(tmp_path, capsys):
    assert main(["run", "fig5-drift", "--out", str(tmp_path), "--set", "nonsense=1"]) == 1
    assert "unknown config keys" in capsys.readouterr().err


def test_run_writes_manifested_artifacts(tmp_path):
    out = tmp_path / "a"
    assert main(["run", "fig5-drift", "--out", str(out), "--seed", "4", *SMALL]) == 0
    man = _manifest(out)
    listed = {e["path"] for e in man["files"]}
    on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert listed == on_disk and "summary.json" in listed and "trace.csv" in listed
    summary = json.loads((out / "summary.json").read_text())
    for key in ("seed", "L", "h", "p", "Q", "t_window_used", "clamp_count", "boundary_contaminated"):
        assert key in summary
    assert summary["seed"] == 4 and summary["config"]["L"] == 21 and summary["config"]["grid"]["points"] == 7
    tr = read_trace_csv(out / "trace.csv")
    assert tr["t"].size == 7 and np.all(np.diff(tr["n_cm"]) < 0)


def test_reruns_hash_identically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["fig4-erratic", "--seed", "11", "--realizations", "2", "--set", "L=9"]
    assert main(["run", *args, "--out", str(a)]) == 0
    assert main(["run", *args, "--out", str(b), "--workers", "2"]) == 0
    assert _manifest(a) == _manifest(b)
    assert main(["run", "fig4-erratic", "--seed", "12", "--realizations", "2", "--set", "L=9",
                 "--out", str(b)]) == 0
    assert _manifest(a) != _manifest(b)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("seed: 1\nL: 15\nt_max: 2\ngrid:\n  points: 5\n")
    out = tmp_path / "o"
    assert main(["run", "fig6-diffusion", "--config", str(cfg), "--seed", "9", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 9 and summary["L"] == 15


def test_env_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("LIOUSKIN_OUT", str(tmp_path))
    assert main(["run", "fig3-reciprocal", "--set", "L=5"]) == 0
    assert (tmp_path / "fig3-reciprocal" / "manifest.json").exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "liouskin", "list"], capture_output=True, text=True, check=True)
    assert "fig9-sinai" in res.stdout
    with pytest.raises(subprocess.CalledProcessError) as exc:
        subprocess.run([sys.executable, "-m", "liouskin", "run"], capture_output=True, check=True)
    assert exc.value.returncode == 2
