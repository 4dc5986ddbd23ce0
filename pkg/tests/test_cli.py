"""Command-line interface: output formats, overrides, and exit codes."""

import json
import subprocess
import sys

import pytest

from wdl import read_results, read_sweep
from wdl.cli import run_cli

_SURVIVAL = {
    "experiment_id": "unit-test",
    "n": 4,
    "budget": 2,
    "bounds": {"f_minus": 2.0, "f_plus": 3.0, "g_minus": 0.2, "g_plus": 0.5},
    "policies": ["min-u", "max-u", "random"],
    "noise": {"sigma": 0.3, "cap": 2.0},
    "horizon": 40,
    "replications": 4,
    "base_seed": 3,
}
_INDETERMINATE = {
    "n": 2,
    "budget": 1,
    "bounds": {"f_minus": 0.5, "f_plus": 3.0, "g_minus": 0.2, "g_plus": 1.0},
    "policies": ["min-u", "max-u"],
}


def _config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_check_reports_both_margins(tmp_path, capsys):
    assert run_cli(["check", "--config", _config(tmp_path, _SURVIVAL)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["survival: true (zeta=0.75)", "ruin: false (zeta=1.4)"]


def test_check_flags_an_indeterminate_regime(tmp_path, capsys):
    assert run_cli(["check", "--config", _config(tmp_path, _INDETERMINATE)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == [
        "survival: false (zeta=-0.25)",
        "ruin: false (zeta=1.4)",
        "regime: indeterminate",
    ]


def test_rates_prints_one_line_per_policy(tmp_path, capsys):
    assert run_cli(["rates", "--config", _config(tmp_path, _SURVIVAL)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == [
        "min-u: 1.4 (rawlsian, survival)",
        "max-u: 1.25 (utilitarian, any)",
        "random: 1.4 (random, survival)",
    ]


def test_rates_reports_a_missing_prediction(tmp_path, capsys):
    assert run_cli(["rates", "--config", _config(tmp_path, _INDETERMINATE)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "min-u: no prediction"
    assert out[1] == "max-u: 1 (utilitarian, any)"


def test_simulate_writes_deterministic_results(tmp_path, capsys):
    config = _config(tmp_path, _SURVIVAL)
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    third = tmp_path / "c.csv"
    assert run_cli(["simulate", "--config", config, "--out", str(first)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "experiment: unit-test"
    assert out[1] == "replications: 4, horizon: 40, seed: 3"
    assert out[-1] == f"wrote {first}"
    assert any(line.startswith("min-u: social ") for line in out)

    assert run_cli(["simulate", "--config", config, "--out", str(second)]) == 0
    assert run_cli(["simulate", "--config", config, "--out", str(third), "--jobs", "2"]) == 0
    assert first.read_bytes() == second.read_bytes() == third.read_bytes()

    rows = read_results(first)
    assert len(rows) == 3 * 4 * 2  # policies x replications x checkpoints
    assert {r["checkpoint_t"] for r in rows} == {10, 40}


def test_simulate_overrides(tmp_path, capsys):
    config = _config(tmp_path, _SURVIVAL)
    out_csv = tmp_path / "out.csv"
    code = run_cli([
        "simulate", "--config", config, "--out", str(out_csv),
        "--policies", "max-u", "--horizon", "20", "--reps", "2", "--seed", "99",
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "replications: 2, horizon: 20, seed: 99" in stdout
    rows = read_results(out_csv)
    assert {r["policy"] for r in rows} == {"max-u"}
    assert {r["checkpoint_t"] for r in rows} == {10, 20}
    assert {r["replication"] for r in rows} == {0, 1}

    code = run_cli([
        "simulate", "--config", config, "--out", str(out_csv), "--policies", "max-fg",
    ])
    assert code == 1
    assert "policies not in the config: max-fg" in capsys.readouterr().err


def test_seed_resolution_order(tmp_path, capsys, monkeypatch):
    config = _config(tmp_path, _SURVIVAL)
    out_csv = tmp_path / "out.csv"

    monkeypatch.delenv("WDL_SEED", raising=False)
    run_cli(["simulate", "--config", config, "--out", str(out_csv)])
    assert "seed: 3" in capsys.readouterr().out

    monkeypatch.setenv("WDL_SEED", "50")
    run_cli(["simulate", "--config", config, "--out", str(out_csv)])
    assert "seed: 50" in capsys.readouterr().out

    run_cli(["simulate", "--config", config, "--out", str(out_csv), "--seed", "99"])
    assert "seed: 99" in capsys.readouterr().out

    monkeypatch.setenv("WDL_SEED", "not-a-seed")
    assert run_cli(["simulate", "--config", config, "--out", str(out_csv)]) == 1
    assert "WDL_SEED must be an integer" in capsys.readouterr().err


def test_ruin_bound_closed_form_output(capsys):
    assert run_cli(["ruin-bound", "--p", "0.6"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["r*: 0.405465", "lundberg-bound(u=5): 0.131687"]

    assert run_cli(["ruin-bound", "--increments", '{"2": 0.5, "-1": 0.5}', "--u", "4"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "r*: 0.481212"
    assert out[1].startswith("lundberg-bound(u=4): ")


def test_ruin_bound_monte_carlo_estimate(capsys):
    code = run_cli([
        "ruin-bound", "--p", "0.75", "--u", "3", "--trials", "20000", "--seed", "1",
    ])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert lines[2].startswith("mc-estimate: ")
    value = float(lines[2].split()[1])
    se = float(lines[2].split("se=")[1].rstrip(")"))
    assert abs(value - (1.0 / 3.0) ** 3) <= 4.0 * se


def test_ruin_bound_usage_errors(capsys):
    cases = [
        ["ruin-bound"],
        ["ruin-bound", "--p", "0.6", "--increments", '{"1": 1.0}'],
        ["ruin-bound", "--p", "1.5"],
        ["ruin-bound", "--increments", "not json"],
        ["ruin-bound", "--increments", '{"a": 0.5, "-1": 0.5}'],
        ["ruin-bound", "--increments", '{"1": 0.6, "-1": 0.6}'],
        ["ruin-bound", "--p", "0.4"],  # no positive root
    ]
    for argv in cases:
        assert run_cli(argv) == 1
        assert "error:" in capsys.readouterr().err


def test_sweep_command(tmp_path, capsys):
    sweep_config = _config(tmp_path, {
        "kind": "sweep",
        "b_grid": [0.5],
        "sigma_grid": [0.0, 0.1],
        "f_minus": 1.0,
        "f_plus": 1.5,
        "g_plus": 0.2,
        "n": 6,
        "budget": 1,
        "replications": 3,
        "horizon": 60,
        "early_checkpoint": 10,
        "noise": {"sigma": 0.2, "cap": 2.0},
        "initial": {"mean": 8.0, "std": 2.0, "low": 1.0, "high": 15.0},
    }, name="sweep.json")
    out_csv = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--config", sweep_config, "--out", str(out_csv)]) == 0
    stdout = capsys.readouterr().out
    assert "b\\sigma" in stdout
    assert f"wrote {out_csv}" in stdout
    rows = read_sweep(out_csv)
    assert len(rows) == 4  # cells x (early, final)

    # The sweep command refuses experiment configs and vice versa.
    experiment_config = _config(tmp_path, _SURVIVAL)
    assert run_cli(["sweep", "--config", experiment_config, "--out", str(out_csv)]) == 1
    assert "needs a sweep config" in capsys.readouterr().err
    assert run_cli(["simulate", "--config", sweep_config, "--out", str(out_csv)]) == 1
    assert "needs an experiment config" in capsys.readouterr().err


def test_grid_command(tmp_path, capsys):
    config = _config(tmp_path, {
        "n": 6,
        "budget": 1,
        "bounds": {"f_minus": 3.0, "f_plus": 4.0, "g_minus": 0.02, "g_plus": 0.05},
        "policies": ["min-u", "max-u"],
        "noise": {"sigma": 0.3, "cap": 2.0},
        "horizon": 60,
        "replications": 3,
    })
    out_csv = tmp_path / "grid.csv"
    assert run_cli(["grid", "--config", config, "--out", str(out_csv)]) == 0
    stdout = capsys.readouterr().out
    assert "f-direction \\ g-direction" in stdout
    assert stdout.count("\n") == 5  # header + three rows + wrote line
    rows = read_results(out_csv)
    ids = {r["experiment_id"] for r in rows}
    assert len(ids) == 9
    assert "f=increasing,g=decreasing" in ids
    assert len(rows) == 9 * 2 * 3 * 2  # cells x policies x reps x checkpoints


def test_top_level_usage_and_config_errors(tmp_path, capsys):
    assert run_cli(["--help"]) == 0
    capsys.readouterr()
    assert run_cli([]) == 1
    assert run_cli(["simulate", "--config", "x.json"]) == 1  # --out is required
    assert run_cli(["check", "--config", str(tmp_path / "missing.json")]) == 1
    assert "cannot read config file" in capsys.readouterr().err


def test_installed_entry_point_smoke(tmp_path):
    config = _config(tmp_path, _SURVIVAL)
    proc = subprocess.run(
        [sys.executable, "-m", "wdl.cli", "check", "--config", config],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "survival: true (zeta=0.75)"
