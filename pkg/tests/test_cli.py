import json
import subprocess
import sys

import numpy as np
import pytest

from levelline.cli import build_parser, main


def test_parser_lists_commands():
    p = build_parser()
    for argv in (["simulate"], ["curve", "x.csv"], ["suite", "bm"], ["study", "approx"], ["dgff", "mono"]):
        assert p.parse_args(argv).command == argv[0]
    with pytest.raises(SystemExit):
        p.parse_args(["suite", "nope"])


def test_simulate_then_curve_and_observable(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--paths", "2", "--dt", "1e-3", "--out", str(out)]) == 0
    path = out / "path_0000.csv"
    assert path.exists()
    curve = tmp_path / "c.csv"
    assert main(["curve", str(path), "--out", str(curve)]) == 0
    a = np.loadtxt(curve, delimiter=",", skiprows=1)
    b = np.loadtxt(out / "curve_0000.csv", delimiter=",", skiprows=1)
    assert np.array_equal(a, b)
    obs = tmp_path / "o.csv"
    assert main(["observable", str(path), "--point", "0,1", "--out", str(obs)]) == 0
    rows = np.loadtxt(obs, delimiter=",", skiprows=1)
    assert rows[0, 1] == pytest.approx(0.0, abs=1e-15)
    assert rows[0, 2] == pytest.approx(np.pi / 2)


def test_config_file_and_seed_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"paths": 1, "T": 0.05, "boundary": {"atomsR": [[0.0, -0.5]]}}))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg), "--out", str(a), "--seed", "1"]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(b), "--seed", "2"]) == 0
    assert (a / "path_0000.csv").read_bytes() != (b / "path_0000.csv").read_bytes()
    header = (a / "path_0000.csv").read_text().splitlines()[0]
    assert header == "t,W,V1"


def test_errors_exit_with_two(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["curve", str(tmp_path / "missing.csv")]) == 2


def test_suite_command_writes_report(tmp_path):
    assert main(["suite", "loewner-oracle", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "loewner-oracle.json").read_text())
    assert rep["passed"] is True


def test_dgff_sample_command(tmp_path):
    assert main(["dgff", "sample", "--size", "16", "--out", str(tmp_path)]) == 0
    field = np.loadtxt(tmp_path / "field.csv", delimiter=",")
    assert field.shape == (16, 16)
    assert (tmp_path / "interface_edges.csv").read_text().startswith("j_neg,i_neg,j_pos,i_pos")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "levelline.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.strip()
