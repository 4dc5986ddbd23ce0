"""Config files, income ingestion, and the result CSV schemas.

Configs are JSON.  An experiment config realises an
:class:`~wdl.experiments.ExperimentConfig`; a sweep config realises a
:class:`~wdl.experiments.SweepConfig`.  Unknown keys are rejected with their
dotted path so typos fail loudly instead of silently falling back to
defaults.

Result CSVs use ``repr`` for floats (shortest round-tripping form), sort
rows on stable keys, and leave the prediction column empty when no
prediction applies, so identical runs serialise byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import BoundSet
from .experiments import (
    ExperimentConfig,
    InitialWelfareSpec,
    ModelTemplate,
    SweepConfig,
    SweepResult,
    TrajectoryResult,
)
from .noise import NOISE_KINDS, NoiseSpec
from .policies import PolicySpec

RESULT_COLUMNS = (
    "experiment_id",
    "policy",
    "replication",
    "checkpoint_t",
    "social_welfare",
    "predicted_rate",
)
SWEEP_COLUMNS = ("b", "sigma", "horizon_checkpoint", "winrate_minU", "n_reps")


class ConfigError(ValueError):
    """Raised when a configuration file cannot be realised."""


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"{path}: {message}")


def _require_keys(section: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        dotted = ", ".join(f"{path}.{key}" if path else key for key in unknown)
        _fail(path or "config", f"unknown keys: {dotted}")


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        _fail(path, f"expected a finite number, got {value!r}")
    return float(value)


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    return value


def _as_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"expected true or false, got {value!r}")
    return value


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        _fail(path, f"expected a string, got {value!r}")
    return value


def _bound_vector(value: Any, n: int, path: str) -> np.ndarray:
    if isinstance(value, list):
        if len(value) != n:
            _fail(path, f"expected {n} entries, got {len(value)}")
        return np.array([_as_number(v, f"{path}[{i}]") for i, v in enumerate(value)])
    return np.full(n, _as_number(value, path))


def _parse_noise(section: Any, path: str) -> NoiseSpec:
    if not isinstance(section, dict):
        _fail(path, f"expected an object, got {section!r}")
    _require_keys(section, {"kind", "sigma", "cap", "lattice_mass", "z_star", "tail_mass"}, path)
    kind = _as_str(section.get("kind", "capped-gaussian"), f"{path}.kind")
    if kind not in NOISE_KINDS:
        _fail(f"{path}.kind", f"expected one of {NOISE_KINDS}, got {kind!r}")
    kwargs: dict[str, Any] = {"kind": kind}
    for name in ("sigma", "cap", "z_star", "tail_mass"):
        if name in section:
            kwargs[name] = _as_number(section[name], f"{path}.{name}")
    if "lattice_mass" in section:
        raw = section["lattice_mass"]
        if not isinstance(raw, dict) or not raw:
            _fail(f"{path}.lattice_mass", f"expected a non-empty object, got {raw!r}")
        mass = {}
        for key, prob in raw.items():
            try:
                step = int(key)
            except ValueError:
                _fail(f"{path}.lattice_mass", f"step {key!r} is not an integer")
            if str(step) != key.strip():
                _fail(f"{path}.lattice_mass", f"step {key!r} is not an integer")
            mass[step] = _as_number(prob, f"{path}.lattice_mass[{key}]")
        kwargs["lattice_mass"] = mass
    try:
        return NoiseSpec(**kwargs)
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_policies(section: Any, path: str) -> tuple[PolicySpec, ...]:
    if not isinstance(section, list) or not section:
        _fail(path, f"expected a non-empty list, got {section!r}")
    policies = []
    for i, entry in enumerate(section):
        entry_path = f"{path}[{i}]"
        if isinstance(entry, str):
            kind, tie_break = entry, None
        elif isinstance(entry, dict):
            _require_keys(entry, {"kind", "tie_break"}, entry_path)
            kind = _as_str(entry.get("kind"), f"{entry_path}.kind")
            tie_break = entry.get("tie_break")
            if tie_break is not None:
                tie_break = _as_str(tie_break, f"{entry_path}.tie_break")
        else:
            _fail(entry_path, f"expected a policy name or object, got {entry!r}")
        try:
            policies.append(PolicySpec(kind, tie_break=tie_break))
        except ValueError as exc:
            _fail(entry_path, str(exc))
    return tuple(policies)


def _parse_initial(section: Any, n: int, path: str) -> InitialWelfareSpec:
    if not isinstance(section, dict):
        _fail(path, f"expected an object, got {section!r}")
    source = _as_str(section.get("source", "capped-normal"), f"{path}.source")
    if source == "capped-normal":
        _require_keys(section, {"source", "mean", "std", "low", "high"}, path)
        kwargs = {
            name: _as_number(section[name], f"{path}.{name}")
            for name in ("mean", "std", "low", "high")
            if name in section
        }
        try:
            return InitialWelfareSpec(source="capped-normal", **kwargs)
        except ValueError as exc:
            _fail(path, str(exc))
    if source == "vector":
        _require_keys(section, {"source", "values"}, path)
        raw = section.get("values")
        if not isinstance(raw, list):
            _fail(f"{path}.values", f"expected a list, got {raw!r}")
        values = tuple(_as_number(v, f"{path}.values[{i}]") for i, v in enumerate(raw))
        if len(values) != n:
            _fail(f"{path}.values", f"expected {n} entries, got {len(values)}")
        try:
            return InitialWelfareSpec(source="vector", values=values)
        except ValueError as exc:
            _fail(path, str(exc))
    if source == "income-csv":
        _require_keys(section, {"source", "path", "column", "samples_per_individual", "unit"}, path)
        csv_path = _as_str(section.get("path"), f"{path}.path")
        kwargs: dict[str, Any] = {}
        if "column" in section:
            kwargs["column"] = _as_str(section["column"], f"{path}.column")
        if "samples_per_individual" in section:
            spi = _as_int(section["samples_per_individual"], f"{path}.samples_per_individual")
            if spi < 1:
                _fail(f"{path}.samples_per_individual", f"expected a positive integer, got {spi}")
            kwargs["samples_per_individual"] = spi
        if "unit" in section:
            unit = _as_number(section["unit"], f"{path}.unit")
            if unit <= 0:
                _fail(f"{path}.unit", f"expected a positive number, got {unit}")
            kwargs["unit"] = unit
        values = ingest_income_csv(csv_path, **kwargs)
        if len(values) != n:
            _fail(
                f"{path}.path",
                f"income file yields {len(values)} individuals, population has {n}",
            )
        return InitialWelfareSpec(source="vector", values=tuple(float(v) for v in values))
    _fail(f"{path}.source", f"expected one of ('capped-normal', 'vector', 'income-csv'), got {source!r}")


_EXPERIMENT_KEYS = {
    "kind", "experiment_id", "n", "budget", "bounds", "curves", "noise",
    "policies", "initial", "horizon", "replications", "base_seed", "checkpoints",
}
_BOUNDS_KEYS = {"f_minus", "f_plus", "g_minus", "g_plus"}
_CURVES_KEYS = {
    "f_shape", "g_shape", "f_direction", "g_direction", "knot_range",
    "fixed_knots", "require_fg_increasing", "f_reversal",
}
_SWEEP_KEYS = {
    "kind", "experiment_id", "n", "budget", "b_grid", "sigma_grid",
    "f_minus", "f_plus", "g_plus", "noise", "initial", "horizon",
    "replications", "early_checkpoint", "base_seed", "knot_range",
    "require_fg_increasing",
}


def _parse_experiment(data: dict) -> ExperimentConfig:
    _require_keys(data, _EXPERIMENT_KEYS, "")
    for required in ("n", "budget", "bounds", "policies"):
        if required not in data:
            _fail("config", f"missing required key {required!r}")
    n = _as_int(data["n"], "n")
    if n < 1:
        _fail("n", f"expected a positive integer, got {n}")
    budget = _as_int(data["budget"], "budget")
    if budget < 1:
        _fail("budget", f"expected a positive integer, got {budget}")
    if budget > n:
        _fail("budget", f"budget {budget} exceeds population size {n}")

    bounds_section = data["bounds"]
    if not isinstance(bounds_section, dict):
        _fail("bounds", f"expected an object, got {bounds_section!r}")
    _require_keys(bounds_section, _BOUNDS_KEYS, "bounds")
    for required in _BOUNDS_KEYS:
        if required not in bounds_section:
            _fail("bounds", f"missing required key {required!r}")
    vectors = {
        name: _bound_vector(bounds_section[name], n, f"bounds.{name}")
        for name in ("f_minus", "f_plus", "g_minus", "g_plus")
    }
    if np.any(vectors["g_minus"] <= 0):
        _fail("bounds.g_minus", "decay bounds must be positive")
    try:
        bounds = BoundSet(
            vectors["f_minus"], vectors["f_plus"], vectors["g_minus"], vectors["g_plus"], budget
        )
    except ValueError as exc:
        _fail("bounds", str(exc))

    curves_section = data.get("curves", {})
    if not isinstance(curves_section, dict):
        _fail("curves", f"expected an object, got {curves_section!r}")
    _require_keys(curves_section, _CURVES_KEYS, "curves")
    template_kwargs: dict[str, Any] = {"bounds": bounds}
    for name in ("f_shape", "g_shape", "f_direction", "g_direction"):
        if name in curves_section:
            template_kwargs[name] = _as_str(curves_section[name], f"curves.{name}")
    if "knot_range" in curves_section:
        template_kwargs["knot_range"] = _as_number(curves_section["knot_range"], "curves.knot_range")
    if "require_fg_increasing" in curves_section:
        template_kwargs["require_fg_increasing"] = _as_bool(
            curves_section["require_fg_increasing"], "curves.require_fg_increasing"
        )
    if "f_reversal" in curves_section and curves_section["f_reversal"] is not None:
        template_kwargs["f_reversal"] = _as_number(curves_section["f_reversal"], "curves.f_reversal")
    if "fixed_knots" in curves_section and curves_section["fixed_knots"] is not None:
        raw = curves_section["fixed_knots"]
        if (
            not isinstance(raw, list) or len(raw) != 2
            or any(not isinstance(pair, list) or len(pair) != 2 for pair in raw)
        ):
            _fail("curves.fixed_knots", "expected [[f_low, f_high], [g_low, g_high]]")
        template_kwargs["fixed_knots"] = tuple(
            (
                _as_number(pair[0], f"curves.fixed_knots[{i}][0]"),
                _as_number(pair[1], f"curves.fixed_knots[{i}][1]"),
            )
            for i, pair in enumerate(raw)
        )
    if "noise" in data:
        template_kwargs["noise"] = _parse_noise(data["noise"], "noise")
    try:
        template = ModelTemplate(**template_kwargs)
    except ValueError as exc:
        _fail("curves", str(exc))

    policies = _parse_policies(data["policies"], "policies")
    initial = _parse_initial(data.get("initial", {}), n, "initial")

    config_kwargs: dict[str, Any] = {
        "template": template,
        "initial": initial,
        "policies": policies,
    }
    if "horizon" in data:
        config_kwargs["horizon"] = _as_int(data["horizon"], "horizon")
    if "replications" in data:
        config_kwargs["replications"] = _as_int(data["replications"], "replications")
    if "base_seed" in data:
        config_kwargs["base_seed"] = _as_int(data["base_seed"], "base_seed")
    if "experiment_id" in data:
        config_kwargs["experiment_id"] = _as_str(data["experiment_id"], "experiment_id")
    if "checkpoints" in data and data["checkpoints"] is not None:
        raw = data["checkpoints"]
        if not isinstance(raw, list):
            _fail("checkpoints", f"expected a list, got {raw!r}")
        config_kwargs["checkpoints"] = tuple(
            _as_int(t, f"checkpoints[{i}]") for i, t in enumerate(raw)
        )
    try:
        return ExperimentConfig(**config_kwargs)
    except ValueError as exc:
        _fail("config", str(exc))


def _parse_sweep(data: dict) -> SweepConfig:
    _require_keys(data, _SWEEP_KEYS, "")
    for required in ("b_grid", "sigma_grid", "f_minus", "f_plus", "g_plus"):
        if required not in data:
            _fail("config", f"missing required key {required!r}")
    for name in ("b_grid", "sigma_grid"):
        if not isinstance(data[name], list) or not data[name]:
            _fail(name, f"expected a non-empty list, got {data[name]!r}")
    kwargs: dict[str, Any] = {
        "b_grid": tuple(_as_number(v, f"b_grid[{i}]") for i, v in enumerate(data["b_grid"])),
        "sigma_grid": tuple(
            _as_number(v, f"sigma_grid[{i}]") for i, v in enumerate(data["sigma_grid"])
        ),
        "f_minus": _as_number(data["f_minus"], "f_minus"),
        "f_plus": _as_number(data["f_plus"], "f_plus"),
        "g_plus": _as_number(data["g_plus"], "g_plus"),
    }
    for name in ("n", "budget", "replications", "horizon", "early_checkpoint", "base_seed"):
        if name in data:
            kwargs[name] = _as_int(data[name], name)
    if "knot_range" in data:
        kwargs["knot_range"] = _as_number(data["knot_range"], "knot_range")
    if "require_fg_increasing" in data:
        kwargs["require_fg_increasing"] = _as_bool(
            data["require_fg_increasing"], "require_fg_increasing"
        )
    if "noise" in data:
        kwargs["noise"] = _parse_noise(data["noise"], "noise")
    if "experiment_id" in data:
        kwargs["experiment_id"] = _as_str(data["experiment_id"], "experiment_id")
    if "initial" in data:
        n = kwargs.get("n", 50)
        kwargs["initial"] = _parse_initial(data["initial"], n, "initial")
    try:
        return SweepConfig(**kwargs)
    except ValueError as exc:
        _fail("config", str(exc))


def load_config(path) -> ExperimentConfig | SweepConfig:
    """Parse a JSON config file into an experiment or sweep configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    kind = data.get("kind", "experiment")
    if kind == "experiment":
        return _parse_experiment(data)
    if kind == "sweep":
        return _parse_sweep(data)
    raise ConfigError(f"kind: expected 'experiment' or 'sweep', got {kind!r}")


def ingest_income_csv(
    path,
    column: str = "income",
    samples_per_individual: int = 200,
    unit: float = 1000.0,
) -> np.ndarray:
    """Turn a raw income survey into an initial welfare vector.

    Incomes are sorted ascending and chunked into groups of
    ``samples_per_individual``; each group's mean, divided by ``unit``,
    becomes one individual's starting welfare.  Rows that do not parse as
    finite numbers are reported together rather than one at a time.
    """
    if samples_per_individual < 1:
        raise ValueError(
            f"samples_per_individual must be a positive integer, got {samples_per_individual!r}"
        )
    if not (unit > 0 and math.isfinite(unit)):
        raise ValueError(f"unit must be a positive number, got {unit!r}")
    path = Path(path)
    incomes = []
    bad_rows = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or column not in reader.fieldnames:
            available = ", ".join(reader.fieldnames or ())
            raise ValueError(
                f"column {column!r} not found in {path}; available columns: {available or '(none)'}"
            )
        for row_number, row in enumerate(reader, start=2):
            raw = row[column]
            try:
                value = float(raw)
            except (TypeError, ValueError):
                bad_rows.append((row_number, raw))
                continue
            if not math.isfinite(value):
                bad_rows.append((row_number, raw))
                continue
            incomes.append(value)
    if bad_rows:
        shown = ", ".join(f"row {r}: {v!r}" for r, v in bad_rows[:10])
        suffix = "" if len(bad_rows) <= 10 else f" (and {len(bad_rows) - 10} more)"
        raise ValueError(f"{len(bad_rows)} non-numeric {column!r} entries in {path}: {shown}{suffix}")
    if not incomes:
        raise ValueError(f"no usable {column!r} entries in {path}")
    groups = len(incomes) // samples_per_individual
    if groups < 1:
        raise ValueError(
            f"{len(incomes)} incomes cannot fill one group of {samples_per_individual}"
        )
    remainder = len(incomes) - groups * samples_per_individual
    if remainder:
        warnings.warn(
            f"discarding {remainder} incomes that do not fill a group of {samples_per_individual}",
            stacklevel=2,
        )
    values = np.sort(np.asarray(incomes, dtype=float))[: groups * samples_per_individual]
    return values.reshape(groups, samples_per_individual).mean(axis=1) / unit


def _format_float(value: float) -> str:
    return repr(float(value))


def write_results_multi(path, batches) -> None:
    """Write ``(experiment_id, {label: TrajectoryResult})`` batches as one CSV."""
    rows = []
    for experiment_id, results in batches:
        for label in sorted(results):
            result = results[label]
            predicted = result.predicted_average
            predicted_text = "" if predicted is None else _format_float(predicted)
            for rep in range(result.replications):
                for ci, t in enumerate(result.checkpoints):
                    rows.append(
                        (
                            experiment_id,
                            label,
                            rep,
                            t,
                            _format_float(result.social[rep, ci]),
                            predicted_text,
                        )
                    )
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULT_COLUMNS)
        writer.writerows(rows)


def write_results(path, results: dict[str, TrajectoryResult], experiment_id: str) -> None:
    """Write one experiment's policy results to the results CSV schema."""
    write_results_multi(path, [(experiment_id, results)])


def read_results(path) -> list[dict[str, Any]]:
    """Read a results CSV back into typed row dicts."""
    rows = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"results file {path} lacks columns: {sorted(missing)}")
        for row in reader:
            rows.append(
                {
                    "experiment_id": row["experiment_id"],
                    "policy": row["policy"],
                    "replication": int(row["replication"]),
                    "checkpoint_t": int(row["checkpoint_t"]),
                    "social_welfare": float(row["social_welfare"]),
                    "predicted_rate": (
                        None if row["predicted_rate"] == "" else float(row["predicted_rate"])
                    ),
                }
            )
    return rows


def write_sweep(path, sweep: SweepResult) -> None:
    """Write a sweep's win-rate matrices, two rows (early, final) per cell."""
    rows = []
    for bi, b in enumerate(sweep.b_grid):
        for si, sigma in enumerate(sweep.sigma_grid):
            for checkpoint, matrix in (
                (sweep.early_checkpoint, sweep.win_early),
                (sweep.horizon, sweep.win_final),
            ):
                value = matrix[bi, si]
                rows.append(
                    (
                        _format_float(b),
                        _format_float(sigma),
                        checkpoint,
                        "" if math.isnan(value) else _format_float(value),
                        int(sweep.n_reps[bi, si]),
                    )
                )
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows(rows)


def read_sweep(path) -> list[dict[str, Any]]:
    """Read a sweep CSV back into typed row dicts."""
    rows = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(SWEEP_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"sweep file {path} lacks columns: {sorted(missing)}")
        for row in reader:
            rows.append(
                {
                    "b": float(row["b"]),
                    "sigma": float(row["sigma"]),
                    "horizon_checkpoint": int(row["horizon_checkpoint"]),
                    "winrate_minU": (
                        None if row["winrate_minU"] == "" else float(row["winrate_minU"])
                    ),
                    "n_reps": int(row["n_reps"]),
                }
            )
    return rows
