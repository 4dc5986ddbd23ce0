"""Figure construction from results and sweep CSV files.

This package talks to the simulator only through its documented CSV
schemas; it never imports the simulation code.  Three figure kinds are
supported:

``convergence``
    One solid line per policy showing the mean measured growth rate over
    replications at each checkpoint, a shaded band of ``band_std`` standard
    deviations around it, and a dashed horizontal line at each policy's
    predicted long-run rate.

``heatmap``
    The final-checkpoint win rate of ``min-u`` over ``max-u`` as a colour
    map over the sweep's (decay floor b, bound spread sigma) grid.  The
    image extent equals the grid's min/max on both axes.

``grid``
    A 3x3 tile of convergence panels, one per curve-direction combination,
    keyed by experiment ids of the form ``f=<direction>,g=<direction>``.

Policies are always drawn and listed in a fixed legend order (the known
labels below, then anything else alphabetically) with a fixed colour per
label, so figures from different runs are directly comparable.  Rendering
is deterministic: repeated renders of the same inputs produce identical
bytes.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.lines import Line2D

KINDS = ("convergence", "heatmap", "grid")

RESULT_COLUMNS = (
    "experiment_id",
    "policy",
    "replication",
    "checkpoint_t",
    "social_welfare",
    "predicted_rate",
)
SWEEP_COLUMNS = ("b", "sigma", "horizon_checkpoint", "winrate_minU", "n_reps")

LEGEND_ORDER = (
    "min-u",
    "max-u",
    "max-f",
    "max-g",
    "max-fg",
    "random",
    "prop-max-u",
    "prop-min-u",
)

_PALETTE = {
    "min-u": "#1f77b4",
    "max-u": "#d62728",
    "max-f": "#ff7f0e",
    "max-g": "#2ca02c",
    "max-fg": "#9467bd",
    "random": "#7f7f7f",
    "prop-max-u": "#e377c2",
    "prop-min-u": "#17becf",
}
_EXTRA_COLORS = ("#8c564b", "#bcbd22", "#aec7e8", "#ffbb78", "#98df8a", "#c5b0d5")

_GRID_DIRECTIONS = ("increasing", "decreasing", "constant")
_SVG_HASH_SALT = "wdl-plots"


class SchemaError(ValueError):
    """An input CSV does not match the schema the figure kind needs."""


@dataclass(frozen=True)
class PlotJob:
    """One batch rendering task.

    ``inputs`` holds one or more CSV paths whose rows are concatenated,
    ``kind`` picks the figure, ``out`` is the image path (format inferred
    from the extension), and ``band_std`` sets the half-width of the shaded
    band in standard deviations (0 disables the band).
    """

    inputs: tuple[str, ...]
    kind: str
    out: str
    band_std: float = 1.0
    title: str | None = None

    def __post_init__(self):
        if isinstance(self.inputs, (str, os.PathLike)):
            object.__setattr__(self, "inputs", (os.fspath(self.inputs),))
        else:
            object.__setattr__(
                self, "inputs", tuple(os.fspath(path) for path in self.inputs)
            )
        if not self.inputs:
            raise ValueError("inputs must name at least one CSV file")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.out, (str, os.PathLike)) or not os.fspath(self.out):
            raise ValueError(f"out must be a non-empty path, got {self.out!r}")
        object.__setattr__(self, "out", os.fspath(self.out))
        band = self.band_std
        if isinstance(band, bool) or not isinstance(band, (int, float)):
            raise ValueError(f"band_std must be a number, got {band!r}")
        band = float(band)
        if not math.isfinite(band) or band < 0:
            raise ValueError(f"band_std must be finite and non-negative, got {band}")
        object.__setattr__(self, "band_std", band)
        if self.title is not None and not isinstance(self.title, str):
            raise ValueError(f"title must be a string or None, got {self.title!r}")


def _read_rows(path: str, columns: tuple[str, ...], label: str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        names = reader.fieldnames or ()
        missing = [column for column in columns if column not in names]
        if missing:
            raise SchemaError(f"{label} file {path} lacks columns: {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{label} file {path} has a header but no data rows")
    return rows


def read_results(path: str) -> list[dict]:
    """Read a results CSV into typed rows, or raise ``SchemaError``."""
    rows = []
    for record in _read_rows(path, RESULT_COLUMNS, "results"):
        predicted = record["predicted_rate"]
        rows.append(
            {
                "experiment_id": record["experiment_id"],
                "policy": record["policy"],
                "replication": int(record["replication"]),
                "checkpoint_t": int(record["checkpoint_t"]),
                "social_welfare": float(record["social_welfare"]),
                "predicted_rate": None if predicted == "" else float(predicted),
            }
        )
    return rows


def read_sweep(path: str) -> list[dict]:
    """Read a sweep CSV into typed rows, or raise ``SchemaError``."""
    rows = []
    for record in _read_rows(path, SWEEP_COLUMNS, "sweep"):
        winrate = record["winrate_minU"]
        rows.append(
            {
                "b": float(record["b"]),
                "sigma": float(record["sigma"]),
                "horizon_checkpoint": int(record["horizon_checkpoint"]),
                "winrate_minU": None if winrate == "" else float(winrate),
                "n_reps": int(record["n_reps"]),
            }
        )
    return rows


def _ordered_policies(labels) -> list[str]:
    rank = {label: index for index, label in enumerate(LEGEND_ORDER)}
    return sorted(set(labels), key=lambda label: (rank.get(label, len(rank)), label))


def _policy_colors(labels: list[str]) -> dict[str, str]:
    colors = {}
    extras = 0
    for label in labels:
        if label in _PALETTE:
            colors[label] = _PALETTE[label]
        else:
            colors[label] = _EXTRA_COLORS[extras % len(_EXTRA_COLORS)]
            extras += 1
    return colors


def _draw_convergence(ax, rows: list[dict], band_std: float) -> list[str]:
    """Paint one convergence panel and return its policies in legend order."""
    labels = _ordered_policies(row["policy"] for row in rows)
    colors = _policy_colors(labels)
    for label in labels:
        mine = [row for row in rows if row["policy"] == label]
        checkpoints = sorted({row["checkpoint_t"] for row in mine})
        means = []
        stds = []
        for checkpoint in checkpoints:
            values = np.array(
                [row["social_welfare"] for row in mine if row["checkpoint_t"] == checkpoint]
            )
            means.append(float(values.mean()))
            stds.append(float(values.std(ddof=1)) if values.size > 1 else 0.0)
        t = np.array(checkpoints, dtype=float)
        means = np.array(means)
        stds = np.array(stds)
        ax.plot(t, means, color=colors[label], linestyle="-", linewidth=1.8, label=label)
        if band_std > 0:
            ax.fill_between(
                t,
                means - band_std * stds,
                means + band_std * stds,
                color=colors[label],
                alpha=0.2,
                linewidth=0,
            )
        predictions = sorted(
            {row["predicted_rate"] for row in mine if row["predicted_rate"] is not None}
        )
        for predicted in predictions:
            ax.axhline(
                predicted,
                color=colors[label],
                linestyle="--",
                linewidth=1.2,
                label="_predicted",
            )
    ax.set_xlabel("t (steps)")
    ax.set_ylabel("mean welfare growth rate")
    return labels


def _concat(paths, reader) -> list[dict]:
    rows = []
    for path in paths:
        rows.extend(reader(path))
    return rows


def _build_convergence(job: PlotJob) -> Figure:
    rows = _concat(job.inputs, read_results)
    figure = Figure(figsize=(8.0, 5.0), dpi=100)
    ax = figure.subplots()
    _draw_convergence(ax, rows, job.band_std)
    ax.legend(loc="best", frameon=False)
    title = job.title or ", ".join(sorted({row["experiment_id"] for row in rows}))
    ax.set_title(title)
    return figure


def _axis_extent(values: list[float]) -> tuple[float, float]:
    low, high = min(values), max(values)
    if low == high:
        return low - 0.5, high + 0.5
    return low, high


def _build_heatmap(job: PlotJob) -> Figure:
    rows = _concat(job.inputs, read_sweep)
    b_values = sorted({row["b"] for row in rows})
    sigma_values = sorted({row["sigma"] for row in rows})
    final_checkpoint = max(row["horizon_checkpoint"] for row in rows)
    matrix = np.full((len(b_values), len(sigma_values)), np.nan)
    b_index = {b: i for i, b in enumerate(b_values)}
    sigma_index = {sigma: i for i, sigma in enumerate(sigma_values)}
    for row in rows:
        if row["horizon_checkpoint"] != final_checkpoint:
            continue
        winrate = row["winrate_minU"]
        if winrate is not None:
            matrix[b_index[row["b"]], sigma_index[row["sigma"]]] = winrate

    figure = Figure(figsize=(7.0, 5.0), dpi=100)
    ax = figure.subplots()
    cmap = matplotlib.colormaps["viridis"].copy()
    cmap.set_bad("#dddddd")
    extent = (*_axis_extent(sigma_values), *_axis_extent(b_values))
    image = ax.imshow(
        matrix,
        origin="lower",
        aspect="auto",
        extent=extent,
        vmin=0.0,
        vmax=1.0,
        cmap=cmap,
    )
    figure.colorbar(image, ax=ax, label="final win rate of min-u over max-u")
    ax.set_xlabel("bound spread sigma")
    ax.set_ylabel("decay floor b")
    ax.set_title(job.title or f"min-u win rate at t={final_checkpoint}")
    return figure


def _build_grid(job: PlotJob) -> Figure:
    rows = _concat(job.inputs, read_results)
    panel_keys = {
        f"f={f_direction},g={g_direction}"
        for f_direction in _GRID_DIRECTIONS
        for g_direction in _GRID_DIRECTIONS
    }
    found = {row["experiment_id"] for row in rows}
    if not (panel_keys & found):
        raise SchemaError(
            "grid figure needs experiment ids like 'f=increasing,g=constant', "
            f"found: {sorted(found)}"
        )

    figure = Figure(figsize=(12.0, 9.5), dpi=100)
    axes = figure.subplots(3, 3, sharex=True)
    policies: list[str] = []
    for i, f_direction in enumerate(_GRID_DIRECTIONS):
        for j, g_direction in enumerate(_GRID_DIRECTIONS):
            ax = axes[i][j]
            key = f"f={f_direction},g={g_direction}"
            cell_rows = [row for row in rows if row["experiment_id"] == key]
            if cell_rows:
                policies.extend(_draw_convergence(ax, cell_rows, job.band_std))
            else:
                ax.annotate(
                    "no data", xy=(0.5, 0.5), xycoords="axes fraction",
                    ha="center", va="center", color="#888888",
                )
            ax.set_title(key, fontsize=10)
            if j > 0:
                ax.set_ylabel("")
            if i < 2:
                ax.set_xlabel("")

    labels = _ordered_policies(policies)
    colors = _policy_colors(labels)
    handles = [
        Line2D([], [], color=colors[label], linestyle="-", linewidth=1.8)
        for label in labels
    ]
    figure.legend(handles, labels, loc="lower center", ncol=max(1, len(labels)), frameon=False)
    if job.title:
        figure.suptitle(job.title)
    return figure


_BUILDERS = {
    "convergence": _build_convergence,
    "heatmap": _build_heatmap,
    "grid": _build_grid,
}


def build_figure(job: PlotJob) -> Figure:
    """Build the figure for a job without touching the output path."""
    return _BUILDERS[job.kind](job)


def render(job: PlotJob) -> str:
    """Render a job to its output image and return the output path.

    The inputs are read and validated before the output path is opened, so
    a bad input never leaves a partial image behind.  SVG output carries no
    date and uses a fixed hash salt, so repeated renders are byte-identical.
    """
    figure = build_figure(job)
    metadata = {"Date": None} if job.out.lower().endswith(".svg") else None
    with matplotlib.rc_context({"svg.hashsalt": _SVG_HASH_SALT}):
        figure.savefig(job.out, metadata=metadata)
    return job.out
