"""Behaviour tests for the figure builders, readers, and CLI."""

import csv
from pathlib import Path

import numpy as np
import pytest

from wdl_plots import (
    KINDS,
    LEGEND_ORDER,
    PlotJob,
    SchemaError,
    build_figure,
    read_results,
    read_sweep,
    render,
)
from wdl_plots.cli import run_cli

DATA = Path(__file__).parent / "data"
CONVERGENCE = str(DATA / "convergence.csv")
SWEEP = str(DATA / "sweep.csv")
GRID = str(DATA / "grid.csv")


def _solid(ax):
    return [line for line in ax.get_lines() if line.get_linestyle() == "-"]


def _dashed(ax):
    return [line for line in ax.get_lines() if line.get_linestyle() == "--"]


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _result_row(policy, replication, checkpoint, welfare, predicted=""):
    return ["toy", policy, replication, checkpoint, welfare, predicted]


RESULT_HEADER = [
    "experiment_id", "policy", "replication", "checkpoint_t",
    "social_welfare", "predicted_rate",
]
SWEEP_HEADER = ["b", "sigma", "horizon_checkpoint", "winrate_minU", "n_reps"]


def test_plot_job_validation(tmp_path):
    out = str(tmp_path / "x.svg")
    job = PlotJob(CONVERGENCE, "convergence", out)
    assert job.inputs == (CONVERGENCE,)
    assert job.band_std == 1.0
    with pytest.raises(ValueError, match="kind must be one of"):
        PlotJob((CONVERGENCE,), "pie", out)
    with pytest.raises(ValueError, match="at least one CSV"):
        PlotJob((), "convergence", out)
    with pytest.raises(ValueError, match="non-empty path"):
        PlotJob((CONVERGENCE,), "convergence", "")
    with pytest.raises(ValueError, match="finite and non-negative"):
        PlotJob((CONVERGENCE,), "convergence", out, band_std=-0.5)
    with pytest.raises(ValueError, match="finite and non-negative"):
        PlotJob((CONVERGENCE,), "convergence", out, band_std=float("nan"))
    with pytest.raises(ValueError, match="must be a number"):
        PlotJob((CONVERGENCE,), "convergence", out, band_std=True)
    with pytest.raises(ValueError, match="title must be a string"):
        PlotJob((CONVERGENCE,), "convergence", out, title=3)
    assert set(KINDS) == {"convergence", "heatmap", "grid"}


def test_read_results_types_and_counts():
    rows = read_results(CONVERGENCE)
    assert len(rows) == 84  # 2 policies x 6 replications x 7 checkpoints
    first = rows[0]
    assert first["experiment_id"] == "convergence-golden"
    assert isinstance(first["replication"], int)
    assert isinstance(first["checkpoint_t"], int)
    assert isinstance(first["social_welfare"], float)
    assert isinstance(first["predicted_rate"], float)
    assert {row["policy"] for row in rows} == {"min-u", "max-u"}


def test_read_sweep_types():
    rows = read_sweep(SWEEP)
    assert len(rows) == 8  # 2x2 grid, two checkpoints per cell
    assert {row["b"] for row in rows} == {0.2, 0.5}
    assert {row["sigma"] for row in rows} == {0.0, 0.05}
    assert all(isinstance(row["winrate_minU"], float) for row in rows)
    assert all(isinstance(row["n_reps"], int) for row in rows)


def test_missing_columns_are_diagnosed(tmp_path):
    bad = tmp_path / "bad.csv"
    _write_rows(bad, ["policy", "note"], [["min-u", "x"]])
    with pytest.raises(SchemaError) as caught:
        read_results(str(bad))
    message = str(caught.value)
    for column in ("experiment_id", "checkpoint_t", "social_welfare", "predicted_rate"):
        assert column in message
    # a results file is not a sweep file and vice versa
    with pytest.raises(SchemaError, match="lacks columns"):
        read_sweep(CONVERGENCE)
    with pytest.raises(SchemaError, match="lacks columns"):
        read_results(SWEEP)


def test_header_only_csv_errors_and_writes_nothing(tmp_path):
    empty = tmp_path / "empty.csv"
    _write_rows(empty, RESULT_HEADER, [])
    out = tmp_path / "fig.svg"
    with pytest.raises(SchemaError, match="no data rows"):
        render(PlotJob((str(empty),), "convergence", str(out)))
    assert not out.exists()


def test_convergence_structure_matches_the_csv():
    job = PlotJob((CONVERGENCE,), "convergence", "unused.svg")
    figure = build_figure(job)
    ax = figure.axes[0]
    solid = _solid(ax)
    assert [line.get_label() for line in solid] == ["min-u", "max-u"]
    dashed = _dashed(ax)
    assert sorted(line.get_ydata()[0] for line in dashed) == [0.355, 0.38199999999999995]
    assert len(ax.collections) == 2  # one band per policy

    rows = read_results(CONVERGENCE)
    checkpoints = sorted({row["checkpoint_t"] for row in rows})
    min_u_line = solid[0]
    np.testing.assert_array_equal(min_u_line.get_xdata(), checkpoints)
    at_final = [
        row["social_welfare"]
        for row in rows
        if row["policy"] == "min-u" and row["checkpoint_t"] == checkpoints[-1]
    ]
    assert min_u_line.get_ydata()[-1] == pytest.approx(np.mean(at_final), abs=1e-15)
    assert ax.get_title() == "convergence-golden"


def test_band_width_follows_band_std():
    wide = build_figure(PlotJob((CONVERGENCE,), "convergence", "u.svg", band_std=2.0))
    none = build_figure(PlotJob((CONVERGENCE,), "convergence", "u.svg", band_std=0.0))
    assert len(wide.axes[0].collections) == 2
    assert len(none.axes[0].collections) == 0


def test_legend_order_is_fixed(tmp_path):
    path = tmp_path / "mixed.csv"
    rows = []
    for policy in ("zzz-custom", "max-u", "min-u"):
        for rep in (0, 1):
            rows.append(_result_row(policy, rep, 10, 0.1))
            rows.append(_result_row(policy, rep, 20, 0.2))
    _write_rows(path, RESULT_HEADER, rows)
    figure = build_figure(PlotJob((str(path),), "convergence", "u.svg"))
    labels = [line.get_label() for line in _solid(figure.axes[0])]
    assert labels == ["min-u", "max-u", "zzz-custom"]
    assert list(LEGEND_ORDER[:2]) == ["min-u", "max-u"]


def test_policies_without_predictions_draw_no_dashed_lines(tmp_path):
    path = tmp_path / "nopred.csv"
    rows = [
        _result_row("min-u", rep, checkpoint, 0.3)
        for rep in (0, 1) for checkpoint in (10, 20)
    ]
    _write_rows(path, RESULT_HEADER, rows)
    figure = build_figure(PlotJob((str(path),), "convergence", "u.svg"))
    assert len(_solid(figure.axes[0])) == 1
    assert len(_dashed(figure.axes[0])) == 0


def test_multiple_inputs_are_concatenated(tmp_path):
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    _write_rows(first, RESULT_HEADER, [
        _result_row("min-u", 0, 10, 0.1), _result_row("min-u", 0, 20, 0.2),
    ])
    _write_rows(second, RESULT_HEADER, [
        _result_row("max-u", 0, 10, 0.3), _result_row("max-u", 0, 20, 0.4),
    ])
    figure = build_figure(PlotJob((str(first), str(second)), "convergence", "u.svg"))
    assert [line.get_label() for line in _solid(figure.axes[0])] == ["min-u", "max-u"]


def test_heatmap_matrix_and_extent():
    figure = build_figure(PlotJob((SWEEP,), "heatmap", "u.svg"))
    ax = figure.axes[0]
    assert len(ax.images) == 1
    image = ax.images[0]
    assert tuple(image.get_extent()) == (0.0, 0.05, 0.2, 0.5)
    matrix = np.asarray(image.get_array(), dtype=float)
    # rows are ascending b, columns ascending sigma, final checkpoint only
    np.testing.assert_allclose(matrix, [[1.0, 0.8], [1.0, 0.8]])


def test_heatmap_handles_missing_cells_and_flat_axes(tmp_path):
    path = tmp_path / "sparse.csv"
    _write_rows(path, SWEEP_HEADER, [
        [0.2, 0.0, 10, 0.5, 4],
        [0.2, 0.0, 300, 1.0, 4],
        [0.2, 0.05, 10, "", 0],
        [0.2, 0.05, 300, "", 0],
    ])
    figure = build_figure(PlotJob((str(path),), "heatmap", "u.svg"))
    image = figure.axes[0].images[0]
    matrix = np.asarray(image.get_array(), dtype=float)
    assert matrix.shape == (1, 2)
    assert matrix[0, 0] == 1.0 and np.isnan(matrix[0, 1])
    # a single b value pads its axis so the image stays visible
    assert tuple(image.get_extent()) == (0.0, 0.05, 0.2 - 0.5, 0.2 + 0.5)


def test_grid_tiles_nine_panels():
    figure = build_figure(PlotJob((GRID,), "grid", "u.svg"))
    assert len(figure.axes) == 9
    titles = {ax.get_title() for ax in figure.axes}
    assert titles == {
        f"f={f},g={g}"
        for f in ("increasing", "decreasing", "constant")
        for g in ("increasing", "decreasing", "constant")
    }
    for ax in figure.axes:
        assert len(_solid(ax)) == 2
    assert len(figure.legends) == 1


def test_grid_marks_missing_panels(tmp_path):
    rows = read_results(GRID)
    kept = [row for row in rows if row["experiment_id"] != "f=constant,g=constant"]
    path = tmp_path / "partial.csv"
    _write_rows(path, RESULT_HEADER, [
        [
            row["experiment_id"], row["policy"], row["replication"],
            row["checkpoint_t"], row["social_welfare"],
            "" if row["predicted_rate"] is None else row["predicted_rate"],
        ]
        for row in kept
    ])
    figure = build_figure(PlotJob((str(path),), "grid", "u.svg"))
    empty = [ax for ax in figure.axes if not ax.get_lines()]
    assert len(empty) == 1
    assert empty[0].get_title() == "f=constant,g=constant"
    assert any(text.get_text() == "no data" for text in empty[0].texts)


def test_grid_rejects_foreign_experiment_ids():
    with pytest.raises(SchemaError, match="needs experiment ids like"):
        build_figure(PlotJob((CONVERGENCE,), "grid", "u.svg"))


def test_rendering_is_deterministic(tmp_path):
    for name, kind, source in (
        ("conv.svg", "convergence", CONVERGENCE),
        ("heat.png", "heatmap", SWEEP),
    ):
        first = tmp_path / f"a-{name}"
        second = tmp_path / f"b-{name}"
        render(PlotJob((source,), kind, str(first)))
        render(PlotJob((source,), kind, str(second)))
        assert first.read_bytes() == second.read_bytes()
        # overwriting in place reproduces the same bytes
        render(PlotJob((source,), kind, str(first)))
        assert first.read_bytes() == second.read_bytes()


def test_cli_renders_each_kind(tmp_path, capsys):
    for kind, source in (
        ("convergence", CONVERGENCE), ("heatmap", SWEEP), ("grid", GRID),
    ):
        out = tmp_path / f"{kind}.svg"
        code = run_cli(["--in", source, "--out", str(out), "--kind", kind])
        assert code == 0
        assert capsys.readouterr().out == f"wrote {out}\n"
        assert out.exists()


def test_cli_error_paths(tmp_path, capsys):
    out = str(tmp_path / "fig.svg")
    header_only = tmp_path / "header.csv"
    _write_rows(header_only, RESULT_HEADER, [])

    cases = (
        ["--in", CONVERGENCE, "--out", out, "--kind", "pie"],
        ["--in", CONVERGENCE, "--kind", "convergence"],
        ["--out", out, "--kind", "convergence"],
        ["--in", str(tmp_path / "missing.csv"), "--out", out, "--kind", "convergence"],
        ["--in", SWEEP, "--out", out, "--kind", "convergence"],
        ["--in", str(header_only), "--out", out, "--kind", "convergence"],
        ["--in", CONVERGENCE, "--out", out, "--kind", "convergence", "--band-std", "-1"],
    )
    for argv in cases:
        assert run_cli(argv) == 1
        captured = capsys.readouterr()
        assert captured.err.startswith("error:")
    assert not Path(out).exists()
    assert run_cli(["--help"]) == 0
