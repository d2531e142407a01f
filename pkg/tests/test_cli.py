import json
import math

import numpy as np
import pytest

from simplexcs.cli import load_observations, main


def test_load_observations_categories(tmp_path):
    p = tmp_path / "obs.csv"
    p.write_text("1\n2\n1\n3\n")
    obs = load_observations(str(p))
    assert obs.shape == (4, 3)
    assert np.array_equal(obs.sum(axis=0), [2, 1, 1])


def test_load_observations_simplex_rows(tmp_path):
    p = tmp_path / "obs.csv"
    p.write_text("0.2,0.8\n0.5,0.5\n")
    obs = load_observations(str(p))
    assert obs.shape == (2, 2)
    assert obs[0, 1] == 0.8


def test_load_observations_box(tmp_path):
    p = tmp_path / "obs.csv"
    p.write_text("0.3,0.9\n")
    obs = load_observations(str(p), box=True)
    assert np.allclose(obs[0], [0.15, 0.45, 0.4])


def test_load_observations_empty(tmp_path):
    p = tmp_path / "obs.csv"
    p.write_text("\n")
    with pytest.raises(ValueError):
        load_observations(str(p))


def test_wealth_subcommand_kt(tmp_path, capsys):
    p = tmp_path / "obs.csv"
    p.write_text("1\n1\n")
    rc = main(["wealth", "--method", "kt", "--obs", str(p), "--m", "0.75,0.25"])
    assert rc == 0
    out = float(capsys.readouterr().out.strip())
    assert out == pytest.approx(math.log(2.0 / 3.0), abs=1e-9)


def test_wealth_subcommand_up(tmp_path, capsys):
    p = tmp_path / "obs.csv"
    p.write_text("0.75,0.25\n")
    rc = main(["wealth", "--method", "up", "--obs", str(p), "--m", "0.25,0.75"])
    assert rc == 0
    out = float(capsys.readouterr().out.strip())
    assert out == pytest.approx(math.log(5.0 / 3.0), abs=1e-9)


def test_wealth_subcommand_wor(tmp_path, capsys):
    p = tmp_path / "obs.csv"
    p.write_text("1\n1\n")
    rc = main([
        "wealth", "--method", "wor-kt", "--obs", str(p),
        "--m", "0.75,0.25", "--n", "4",
    ])
    assert rc == 0
    out = float(capsys.readouterr().out.strip())
    assert out == pytest.approx(math.log(1.5), abs=1e-9)
    rc = main([
        "wealth", "--method", "ppr", "--obs", str(p),
        "--m", "0.75,0.25", "--n", "4",
    ])
    out = float(capsys.readouterr().out.strip())
    assert out == pytest.approx(math.log(0.75), abs=1e-9)


def test_simulate_subcommand(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    svg = tmp_path / "plot.svg"
    rc = main([
        "simulate", "--mu", "0.6,0.25,0.15", "--t", "10", "--trials", "2",
        "--seed", "3", "--methods", "kt", "--grid", "10",
        "--out", str(out), "--svg", str(svg),
    ])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert "kt" in payload["final_mean_volume"]
    assert out.exists() and svg.exists()
    assert (tmp_path / "rows.csv.json").exists()


def test_wor_subcommand(capsys):
    rc = main([
        "wor", "--census", "6,3,1", "--permutations", "5", "--delta", "0.1",
        "--method", "ppr", "--seed", "2",
    ])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["N"] == 10
    assert "ppr" in summary["mean_stop"]


def test_wor_stream_subcommand(tmp_path, capsys):
    p = tmp_path / "labels.txt"
    p.write_text("1\n1\n2\n")
    rc = main([
        "wor", "--census", "3,2", "--stream", "--obs", str(p),
        "--delta", "0.2",
    ])
    assert rc == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 3
    first = json.loads(lines[0])
    assert first["t"] == 1
    assert len(first["bounds"]) == 2


def test_confset_subcommand(tmp_path, capsys):
    obs = tmp_path / "obs.csv"
    obs.write_text("1\n1\n1\n2\n")
    out = tmp_path / "set.csv"
    rc = main([
        "confset", "--method", "kt", "--obs", str(obs), "--delta", "0.05",
        "--grid", "10", "--out", str(out),
    ])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert 0.0 < payload["relative_volume"] <= 1.0
    header = out.read_text().split("\n", 1)[0]
    assert header == "m1,m2,running_max_log_wealth,active"
