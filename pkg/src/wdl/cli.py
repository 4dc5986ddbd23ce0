"""Command-line interface.

Subcommands map onto the library's entry points: ``check`` reports which
long-run regime a configuration falls in, ``rates`` prints the predicted
per-policy growth rates, ``simulate`` runs a policy comparison and writes
the results CSV, ``sweep`` runs the heterogeneity sweep, ``grid`` runs the
curve-direction grid, and ``ruin-bound`` solves the adjustment equation.

Every run prints deterministic text (no timings, no machine identifiers),
so identical invocations produce identical bytes on stdout and in output
files.  Exit codes: 0 on success, 1 on configuration or usage errors, 2 on
unexpected failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from .analysis import (
    adjustment_coefficient,
    estimate_ruin_probability,
    lundberg_bound,
    ruin_holds,
    ruin_margin,
    survival_holds,
    survival_margin,
)
from .dataio import ConfigError, load_config, write_results, write_results_multi, write_sweep
from .experiments import (
    ExperimentConfig,
    GRID_DIRECTIONS,
    SweepConfig,
    compare_policies,
    heterogeneity_sweep,
    monotonicity_grid,
    policy_rate_prediction,
)

_SEED_ENV = "WDL_SEED"


class _UsageError(ValueError):
    """Bad command-line arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); route through exit code 1
        raise _UsageError(message)


def _fmt(value: float) -> str:
    return format(float(value), ".6g")


def _build_parser() -> _Parser:
    parser = _Parser(prog="wdl", description="Simulate and analyse welfare intervention policies.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out_required=False):
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
        p.add_argument(
            "--out", required=out_required, default=None, help="path for the output CSV"
        )

    p_check = sub.add_parser("check", help="report which long-run regime the bounds imply")
    p_check.add_argument("--config", required=True, help="path to a JSON config file")

    p_rates = sub.add_parser("rates", help="print predicted growth rates per policy")
    p_rates.add_argument("--config", required=True, help="path to a JSON config file")

    p_sim = sub.add_parser("simulate", help="run the configured policy comparison")
    add_common(p_sim, out_required=True)
    p_sim.add_argument(
        "--policies", default=None,
        help="comma-separated policy labels to run (default: all configured)",
    )
    p_sim.add_argument("--horizon", type=int, default=None, help="override the horizon")
    p_sim.add_argument("--reps", type=int, default=None, help="override the replication count")

    p_sweep = sub.add_parser("sweep", help="run the heterogeneity sweep")
    add_common(p_sweep, out_required=True)

    p_grid = sub.add_parser("grid", help="run the curve-direction grid")
    add_common(p_grid)

    p_ruin = sub.add_parser("ruin-bound", help="adjustment coefficient and ruin bound")
    p_ruin.add_argument("--p", type=float, default=None, help="win probability of a +1/-1 step walk")
    p_ruin.add_argument(
        "--increments", default=None,
        help='JSON object mapping integer steps to probabilities, e.g. \'{"2": 0.5, "-1": 0.5}\'',
    )
    p_ruin.add_argument("--u", type=float, default=5.0, help="initial welfare (default 5)")
    p_ruin.add_argument(
        "--trials", type=int, default=0,
        help="Monte-Carlo trials for an empirical estimate (default 0: skip)",
    )
    p_ruin.add_argument("--horizon", type=int, default=10_000, help="Monte-Carlo step horizon")
    p_ruin.add_argument("--seed", type=int, default=0, help="Monte-Carlo seed")
    return parser


def _resolve_seed(args) -> int | None:
    if getattr(args, "seed", None) is not None:
        return args.seed
    raw = os.environ.get(_SEED_ENV)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"{_SEED_ENV} must be an integer, got {raw!r}") from None


def _load_experiment(path) -> ExperimentConfig:
    cfg = load_config(path)
    if not isinstance(cfg, ExperimentConfig):
        raise ConfigError(f"{path}: this command needs an experiment config, found a sweep config")
    return cfg


def _cmd_check(args) -> int:
    cfg = _load_experiment(args.config)
    bounds = cfg.template.bounds
    survival = survival_holds(bounds)
    ruin = ruin_holds(bounds)
    print(f"survival: {str(survival).lower()} (zeta={_fmt(survival_margin(bounds))})")
    print(f"ruin: {str(ruin).lower()} (zeta={_fmt(ruin_margin(bounds))})")
    if not survival and not ruin:
        print("regime: indeterminate")
    return 0


def _cmd_rates(args) -> int:
    cfg = _load_experiment(args.config)
    bounds = cfg.template.bounds
    for policy in cfg.policies:
        prediction = policy_rate_prediction(policy, bounds)
        if prediction is None:
            print(f"{policy.label}: no prediction")
        else:
            print(
                f"{policy.label}: {_fmt(prediction.average)} "
                f"({prediction.family}, {prediction.regime})"
            )
    return 0


def _apply_overrides(cfg: ExperimentConfig, args, seed: int | None) -> ExperimentConfig:
    changes: dict = {}
    if seed is not None:
        changes["base_seed"] = seed
    if args.reps is not None:
        changes["replications"] = args.reps
    if args.horizon is not None:
        changes["horizon"] = args.horizon
        changes["checkpoints"] = None  # the defaults follow the new horizon
    if args.policies is not None:
        labels = [label.strip() for label in args.policies.split(",") if label.strip()]
        if not labels:
            raise _UsageError("--policies must name at least one policy")
        by_label = {policy.label: policy for policy in cfg.policies}
        missing = [label for label in labels if label not in by_label]
        if missing:
            raise _UsageError(
                f"policies not in the config: {', '.join(missing)} "
                f"(configured: {', '.join(by_label)})"
            )
        changes["policies"] = tuple(by_label[label] for label in labels)
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _apply_overrides(_load_experiment(args.config), args, _resolve_seed(args))
    results = compare_policies(cfg, jobs=args.jobs)
    write_results(args.out, results, cfg.experiment_id)
    print(f"experiment: {cfg.experiment_id}")
    print(
        f"replications: {cfg.replications}, horizon: {cfg.horizon}, "
        f"seed: {cfg.base_seed}"
    )
    for label in sorted(results):
        result = results[label]
        mean = result.social_mean[-1]
        se = result.social_se[-1]
        predicted = (
            "none" if result.predicted_average is None else _fmt(result.predicted_average)
        )
        print(f"{label}: social {_fmt(mean)} (se {_fmt(se)}), predicted {predicted}")
    print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if not isinstance(cfg, SweepConfig):
        raise ConfigError(f"{args.config}: this command needs a sweep config")
    seed = _resolve_seed(args)
    if seed is not None:
        cfg = dataclasses.replace(cfg, base_seed=seed)
    sweep = heterogeneity_sweep(cfg, jobs=args.jobs)
    write_sweep(args.out, sweep)
    print(f"experiment: {cfg.experiment_id}")
    header = "b\\sigma " + " ".join(f"{s:>7g}" for s in sweep.sigma_grid)
    print(header)
    for bi, b in enumerate(sweep.b_grid):
        cells = " ".join(
            "      -" if math.isnan(sweep.win_final[bi, si]) else f"{sweep.win_final[bi, si]:>7.3f}"
            for si in range(len(sweep.sigma_grid))
        )
        print(f"{b:>7g} {cells}")
    print(f"wrote {args.out}")
    return 0


def _cmd_grid(args) -> int:
    cfg = _apply_overrides_grid(_load_experiment(args.config), _resolve_seed(args))
    grid = monotonicity_grid(cfg, jobs=args.jobs)
    width = max(len(o) for o in ("rawlsian-better", "utilitarian-better", "tie")) + 2
    print("f-direction \\ g-direction " + " ".join(f"{g:>{width}}" for g in GRID_DIRECTIONS))
    for f_dir in GRID_DIRECTIONS:
        cells = " ".join(f"{grid.outcome(f_dir, g_dir):>{width}}" for g_dir in GRID_DIRECTIONS)
        print(f"{f_dir:>26} {cells}")
    if args.out is not None:
        batches = [
            (
                f"f={f_dir},g={g_dir}",
                {
                    "min-u": grid.cells[(f_dir, g_dir)].min_u,
                    "max-u": grid.cells[(f_dir, g_dir)].max_u,
                },
            )
            for f_dir in GRID_DIRECTIONS
            for g_dir in GRID_DIRECTIONS
        ]
        write_results_multi(args.out, batches)
        print(f"wrote {args.out}")
    return 0


def _apply_overrides_grid(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    if seed is not None:
        cfg = dataclasses.replace(cfg, base_seed=seed)
    return cfg


def _parse_increments(args) -> dict[int, float]:
    if (args.p is None) == (args.increments is None):
        raise _UsageError("give exactly one of --p or --increments")
    if args.p is not None:
        if not 0.0 < args.p < 1.0:
            raise _UsageError(f"--p must lie strictly between 0 and 1, got {args.p}")
        return {1: args.p, -1: 1.0 - args.p}
    try:
        raw = json.loads(args.increments)
    except json.JSONDecodeError as exc:
        raise _UsageError(f"--increments is not valid JSON: {exc}") from None
    if not isinstance(raw, dict) or not raw:
        raise _UsageError("--increments must be a non-empty JSON object")
    increments = {}
    for key, prob in raw.items():
        try:
            step = int(key)
        except ValueError:
            raise _UsageError(f"--increments step {key!r} is not an integer") from None
        if isinstance(prob, bool) or not isinstance(prob, (int, float)):
            raise _UsageError(f"--increments probability for {key!r} is not a number")
        increments[step] = float(prob)
    return increments


def _cmd_ruin_bound(args) -> int:
    increments = _parse_increments(args)
    result = adjustment_coefficient(increments)
    print(f"r*: {_fmt(result.r_star)}")
    print(f"lundberg-bound(u={args.u:g}): {_fmt(lundberg_bound(args.u, result.r_star))}")
    if args.trials > 0:
        estimate = estimate_ruin_probability(
            increments,
            args.u,
            horizon=args.horizon,
            trials=args.trials,
            rng=np.random.default_rng(args.seed),
        )
        print(f"mc-estimate: {_fmt(estimate.probability)} (se={_fmt(estimate.standard_error)})")
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "rates": _cmd_rates,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "grid": _cmd_grid,
    "ruin-bound": _cmd_ruin_bound,
}


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return int(code) if isinstance(code, int) else 0
    except (_UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected error: {exc!r}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
