"""Experiment protocols: batched trajectory simulation, policy comparison,
the heterogeneous-bounds sweep, and the curve-direction grid.

The engine runs all replications of one policy as ``(replications, n)``
array lanes stepped jointly through the horizon.  Every random draw comes
from a stream derived only from ``(base_seed, seed_prefix, replication,
purpose)``, with separate purposes for model realisation (knots, sampled
bounds, initial welfare), path noise, and the random policy's selection
keys.  Two consequences the tests lean on:

* common random numbers -- every policy sees the identical population and
  the identical shocks in each replication, so policy comparisons difference
  away the shared noise; and
* chunking invariance -- replication lanes never interact, so splitting the
  replications across worker processes (or running them in blocks to cap
  memory) reproduces the single-process results bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .analysis import (
    BoundSet,
    IndeterminateRegimeError,
    RatePrediction,
    predicted_rates,
    survival_holds,
)
from .curves import CURVE_DIRECTIONS, CURVE_SHAPES, CurveTable
from .noise import NoiseSpec, sample_noise
from .policies import (
    PROPORTIONAL_KINDS,
    SCORED_KINDS,
    PolicySpec,
    _batch_scores,
    _batch_softmax,
    _batch_topm,
)

INITIAL_SOURCES = ("capped-normal", "vector")
GRID_DIRECTIONS = ("increasing", "decreasing", "constant")
GRID_OUTCOMES = ("rawlsian-better", "utilitarian-better", "tie")

# stream purposes for per-replication seed derivation
_MODEL, _NOISE, _SELECT = 0, 1, 2

# replication block size is capped so pre-generated noise stays around 64 MB
_NOISE_BUDGET_FLOATS = 8_000_000


class InfeasibleModelError(ValueError):
    """Raised when rejection sampling cannot realise a model."""


def _stream(base_seed: int, prefix: tuple[int, ...], rep: int, purpose: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(*prefix, rep, purpose))
    return np.random.default_rng(seq)


@dataclass(frozen=True, eq=False)
class InitialWelfareSpec:
    """Where replications get their starting welfare vector.

    ``capped-normal`` draws a fresh clipped normal vector per replication
    (sharing the model stream, so all policies see the same draw); ``vector``
    uses one fixed vector for every replication.
    """

    source: str = "capped-normal"
    mean: float = 10.0
    std: float = 3.0
    low: float = 0.5
    high: float = 19.5
    values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.source not in INITIAL_SOURCES:
            raise ValueError(
                f"unknown initial-welfare source {self.source!r}; expected one of {INITIAL_SOURCES}"
            )
        if self.source == "vector":
            if self.values is None:
                raise ValueError("vector initial welfare requires values")
            values = tuple(float(v) for v in self.values)
            if not values:
                raise ValueError("initial welfare vector must not be empty")
            if not all(math.isfinite(v) for v in values):
                raise ValueError("initial welfare vector must be finite")
            object.__setattr__(self, "values", values)
        else:
            for name in ("mean", "std", "low", "high"):
                value = getattr(self, name)
                if not (isinstance(value, (int, float)) and math.isfinite(value)):
                    raise ValueError(f"{name} must be a finite number, got {value!r}")
            if self.std < 0:
                raise ValueError(f"std must be non-negative, got {self.std!r}")
            if self.low > self.high:
                raise ValueError(f"low {self.low!r} must not exceed high {self.high!r}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.source == "vector":
            if len(self.values) != n:
                raise ValueError(
                    f"initial welfare vector has {len(self.values)} entries, population has {n}"
                )
            return np.array(self.values, dtype=float)
        return np.clip(rng.normal(self.mean, self.std, n), self.low, self.high)


@dataclass(frozen=True, eq=False)
class ModelTemplate:
    """Everything needed to realise a population model for one replication."""

    bounds: BoundSet
    f_shape: str = "piecewise-linear"
    g_shape: str = "piecewise-linear"
    f_direction: str = "non-decreasing"
    g_direction: str = "non-increasing"
    knot_range: float = 20.0
    fixed_knots: tuple[tuple[float, float], tuple[float, float]] | None = None
    require_fg_increasing: bool = False
    f_reversal: float | None = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self) -> None:
        if not isinstance(self.bounds, BoundSet):
            raise ValueError(f"bounds must be a BoundSet, got {self.bounds!r}")
        for name in ("f_shape", "g_shape"):
            if getattr(self, name) not in CURVE_SHAPES:
                raise ValueError(f"{name} must be one of {CURVE_SHAPES}, got {getattr(self, name)!r}")
        for name in ("f_direction", "g_direction"):
            if getattr(self, name) not in CURVE_DIRECTIONS:
                raise ValueError(
                    f"{name} must be one of {CURVE_DIRECTIONS}, got {getattr(self, name)!r}"
                )
        if self.f_shape == "constant" and np.any(self.bounds.f_minus != self.bounds.f_plus):
            raise ValueError("a constant f shape requires f_minus == f_plus")
        if self.g_shape == "constant" and np.any(self.bounds.g_minus != self.bounds.g_plus):
            raise ValueError("a constant g shape requires g_minus == g_plus")
        if not (isinstance(self.knot_range, (int, float)) and math.isfinite(self.knot_range)):
            raise ValueError(f"knot_range must be a finite number, got {self.knot_range!r}")
        if self.knot_range <= 0:
            raise ValueError(f"knot_range must be positive, got {self.knot_range!r}")
        if self.fixed_knots is not None:
            pairs = tuple(
                (float(lo), float(hi)) for lo, hi in self.fixed_knots
            )
            if len(pairs) != 2:
                raise ValueError("fixed_knots must hold one (low, high) pair for f and one for g")
            for lo, hi in pairs:
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise ValueError(f"fixed knots must satisfy low < high, got ({lo!r}, {hi!r})")
            object.__setattr__(self, "fixed_knots", pairs)
        if self.f_reversal is not None and not (
            isinstance(self.f_reversal, (int, float)) and math.isfinite(self.f_reversal)
        ):
            raise ValueError(f"f_reversal must be a finite number, got {self.f_reversal!r}")
        if not isinstance(self.noise, NoiseSpec):
            raise ValueError(f"noise must be a NoiseSpec, got {self.noise!r}")

    @property
    def n(self) -> int:
        return self.bounds.n

    @property
    def budget(self) -> int:
        return self.bounds.budget


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """One simulation experiment: template, policies, horizon, replications."""

    template: ModelTemplate
    initial: InitialWelfareSpec
    policies: tuple[PolicySpec, ...]
    horizon: int = 6000
    replications: int = 100
    base_seed: int = 0
    checkpoints: tuple[int, ...] | None = None
    experiment_id: str = "experiment"
    seed_prefix: tuple[int, ...] = ()
    bounds_sampler: Callable[[np.random.Generator], BoundSet] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.template, ModelTemplate):
            raise ValueError(f"template must be a ModelTemplate, got {self.template!r}")
        if not isinstance(self.initial, InitialWelfareSpec):
            raise ValueError(f"initial must be an InitialWelfareSpec, got {self.initial!r}")
        policies = tuple(self.policies)
        if not policies:
            raise ValueError("need at least one policy")
        for policy in policies:
            if not isinstance(policy, PolicySpec):
                raise ValueError(f"policies must be PolicySpec instances, got {policy!r}")
        labels = [p.label for p in policies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"policy labels must be unique, got {labels}")
        for name in ("horizon", "replications"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if isinstance(self.base_seed, bool) or not isinstance(self.base_seed, (int, np.integer)):
            raise ValueError(f"base_seed must be an integer, got {self.base_seed!r}")
        if self.base_seed < 0:
            raise ValueError(f"base_seed must be non-negative, got {self.base_seed!r}")
        if self.checkpoints is None:
            checkpoints = tuple(sorted({min(10, int(self.horizon)), int(self.horizon)}))
        else:
            checkpoints = tuple(int(t) for t in self.checkpoints)
            if not checkpoints:
                raise ValueError("checkpoints must not be empty")
            if any(t < 1 or t > self.horizon for t in checkpoints):
                raise ValueError(f"checkpoints must lie in [1, {self.horizon}], got {checkpoints}")
            if list(checkpoints) != sorted(set(checkpoints)):
                raise ValueError(f"checkpoints must be strictly increasing, got {checkpoints}")
        if not isinstance(self.experiment_id, str) or not self.experiment_id:
            raise ValueError("experiment_id must be a non-empty string")
        prefix = tuple(int(k) for k in self.seed_prefix)
        object.__setattr__(self, "policies", policies)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "base_seed", int(self.base_seed))
        object.__setattr__(self, "checkpoints", checkpoints)
        object.__setattr__(self, "seed_prefix", prefix)


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    """Per-replication outcomes of one policy on one experiment."""

    policy: str
    tie_break: str | None
    checkpoints: tuple[int, ...]
    horizon: int
    replications: int
    base_seed: int
    social: np.ndarray  # (replications, checkpoints) finite-time social rate
    gap: np.ndarray  # (replications, checkpoints) max-min welfare spread
    individual_rates: np.ndarray  # (replications, n) rates over the full horizon
    winner_sets: tuple[tuple[int, ...], ...]
    predicted_average: float | None = None
    predicted_rates: np.ndarray | None = None
    prediction_regime: str | None = None

    @property
    def social_mean(self) -> np.ndarray:
        return self.social.mean(axis=0)

    @property
    def social_std(self) -> np.ndarray:
        if self.replications < 2:
            return np.zeros(self.social.shape[1])
        return self.social.std(axis=0, ddof=1)

    @property
    def social_se(self) -> np.ndarray:
        return self.social_std / math.sqrt(self.replications)

    @property
    def final_social(self) -> np.ndarray:
        """Per-replication social rate at the last checkpoint."""
        return self.social[:, -1]


def finite_time_welfare(current, start, steps: int) -> float:
    """Mean per-step welfare change between two population snapshots."""
    if isinstance(steps, bool) or not isinstance(steps, (int, np.integer)) or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    current = np.asarray(current, dtype=float)
    start = np.asarray(start, dtype=float)
    if current.shape != start.shape:
        raise ValueError(f"snapshot shapes differ: {current.shape} vs {start.shape}")
    return float(np.mean((current - start) / steps))


def _draw_knot_pair(rng: np.random.Generator, span: float) -> tuple[float, float]:
    # 1 - random() lands in (0, 1], so knots fall in (0, span]
    lo = span * (1.0 - rng.random())
    hi = span * (1.0 - rng.random())
    while hi == lo:
        hi = span * (1.0 - rng.random())
    return (lo, hi) if lo < hi else (hi, lo)


def _fg_non_decreasing(template: ModelTemplate, bounds: BoundSet, i: int,
                       f_pair: tuple[float, float], g_pair: tuple[float, float]) -> bool:
    """Check that f_i + g_i is non-decreasing on a dense welfare grid."""
    low = min(f_pair[0], g_pair[0]) - 1.0
    high = max(f_pair[1], g_pair[1]) + 1.0
    if template.f_reversal is not None:
        high = min(high, template.f_reversal)
    if high <= low:
        return True  # the monotone region is empty below the reversal
    grid = np.linspace(low, high, 257)
    f_table = CurveTable(
        lower=bounds.f_minus[i], upper=bounds.f_plus[i],
        knot_low=f_pair[0], knot_high=f_pair[1],
        falling=template.f_direction == "non-increasing",
        sigmoid=template.f_shape == "sigmoid",
        reversal=np.nan,
    )
    g_table = CurveTable(
        lower=bounds.g_minus[i], upper=bounds.g_plus[i],
        knot_low=g_pair[0], knot_high=g_pair[1],
        falling=template.g_direction == "non-increasing",
        sigmoid=template.g_shape == "sigmoid",
        reversal=np.nan,
    )
    total = f_table.evaluate(grid) + g_table.evaluate(grid)
    return bool(np.all(np.diff(total) >= -1e-9))


def _sample_knot_pairs(
    template: ModelTemplate, bounds: BoundSet, rng: np.random.Generator,
    max_rejections: int = 10_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-individual (low, high) knots for f and g, honouring the f+g filter."""
    n = bounds.n
    f_knots = np.empty((n, 2))
    g_knots = np.empty((n, 2))
    if template.fixed_knots is not None:
        f_pair, g_pair = template.fixed_knots
        f_knots[:] = f_pair
        g_knots[:] = g_pair
        if template.require_fg_increasing:
            for i in range(n):
                if not _fg_non_decreasing(template, bounds, i, f_pair, g_pair):
                    raise InfeasibleModelError(
                        "infeasible sweep cell: fixed knots violate the f+g filter"
                    )
        return f_knots, g_knots
    span = template.knot_range
    if not template.require_fg_increasing:
        for knots in (f_knots, g_knots):
            draws = span * (1.0 - rng.random((n, 2)))
            draws.sort(axis=1)
            degenerate = draws[:, 0] == draws[:, 1]
            while np.any(degenerate):  # measure-zero, but keep pairs strict
                rows = np.flatnonzero(degenerate)
                redraw = span * (1.0 - rng.random((rows.size, 2)))
                redraw.sort(axis=1)
                draws[rows] = redraw
                degenerate = draws[:, 0] == draws[:, 1]
            knots[:] = draws
        return f_knots, g_knots
    for i in range(n):
        rejections = 0
        while True:
            f_pair = _draw_knot_pair(rng, span)
            g_pair = _draw_knot_pair(rng, span)
            if _fg_non_decreasing(template, bounds, i, f_pair, g_pair):
                break
            rejections += 1
            if rejections > max_rejections:
                raise InfeasibleModelError(
                    f"infeasible sweep cell: {max_rejections} consecutive rejections "
                    f"while sampling knots for individual {i}"
                )
        f_knots[i] = f_pair
        g_knots[i] = g_pair
    return f_knots, g_knots


def realize_model(template: ModelTemplate, rng: np.random.Generator):
    """Realise one replication: a PopulationModel built from sampled knots.

    Consumes the model stream exactly like the batch engine does, so a model
    realised here matches replication lanes built from the same stream.
    """
    from .curves import ResponseCurve

    bounds = template.bounds
    f_knots, g_knots = _sample_knot_pairs(template, bounds, rng)
    returns = tuple(
        ResponseCurve(
            bounds.f_minus[i], bounds.f_plus[i],
            f_knots[i, 0], f_knots[i, 1],
            shape=template.f_shape, direction=template.f_direction,
            reversal_threshold=template.f_reversal,
        )
        for i in range(bounds.n)
    )
    decays = tuple(
        ResponseCurve(
            bounds.g_minus[i], bounds.g_plus[i],
            g_knots[i, 0], g_knots[i, 1],
            shape=template.g_shape, direction=template.g_direction,
        )
        for i in range(bounds.n)
    )
    from .model import PopulationModel

    return PopulationModel(returns, decays, template.noise, bounds.budget)


def sample_heterogeneous_bounds(
    rng: np.random.Generator,
    n: int,
    budget: int,
    f_minus: float,
    f_plus: float,
    g_plus: float,
    b: float,
    sigma: float,
    max_rejections: int = 10_000,
) -> BoundSet:
    """Draw per-individual bounds around a uniform base.

    ``b`` sets the decay floor (``g- = b * g+`` on average) and ``sigma``
    scales the spread of each bound relative to its magnitude against
    ``g+``.  Draws violating positivity or bound ordering are rejected;
    more than ``max_rejections`` consecutive rejections raise
    :class:`InfeasibleModelError`.
    """
    if not 0.0 < b <= 1.0:
        raise ValueError(f"b must lie in (0, 1], got {b!r}")
    if sigma < 0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be finite and non-negative, got {sigma!r}")
    if not (0 < f_minus <= f_plus and 0 < g_plus):
        raise ValueError("base bounds must be positive with f_minus <= f_plus")
    means = np.array([g_plus, b * g_plus, f_minus, f_plus])
    scales = sigma * np.array([1.0, b, f_minus / g_plus, f_plus / g_plus])
    g_hi = np.empty(n)
    g_lo = np.empty(n)
    f_lo = np.empty(n)
    f_hi = np.empty(n)
    rejections = 0
    for i in range(n):
        while True:
            draw = rng.normal(means, scales)
            if draw.min() > 0.0 and draw[1] <= draw[0] and draw[2] <= draw[3]:
                g_hi[i], g_lo[i], f_lo[i], f_hi[i] = draw
                rejections = 0
                break
            rejections += 1
            if rejections > max_rejections:
                raise InfeasibleModelError(
                    f"infeasible sweep cell (b={b:g}, sigma={sigma:g}): "
                    f"{max_rejections} consecutive rejections"
                )
    return BoundSet(f_lo, f_hi, g_lo, g_hi, budget)


def policy_rate_prediction(policy: PolicySpec, bounds: BoundSet) -> RatePrediction | None:
    """Predicted rates for a policy, or None when no prediction applies.

    Scored lowest-welfare style policies (``min-u``, ``max-g``) map to the
    rawlsian family, highest-welfare style policies (``max-u``, ``max-f``,
    ``max-fg``) to the utilitarian family, and ``random`` to the random
    family.  Proportional policies concentrate one unit of allocation, so
    they map to the same families with an effective budget of 1.
    """
    try:
        if policy.kind in ("min-u", "max-g"):
            return predicted_rates("rawlsian", bounds)
        if policy.kind in ("max-u", "max-f", "max-fg"):
            return predicted_rates("utilitarian", bounds)
        if policy.kind == "random":
            return predicted_rates("random", bounds)
        unit = replace(bounds, budget=1)
        if policy.kind == "prop-min-u":
            return predicted_rates("rawlsian", unit)
        return predicted_rates("utilitarian", unit)
    except (IndeterminateRegimeError, ValueError):
        return None


def _run_block(cfg: ExperimentConfig, policy: PolicySpec, reps: Sequence[int]) -> dict:
    """Simulate one policy over a block of replications."""
    template = cfg.template
    n = template.n
    budget = template.budget
    horizon = cfg.horizon
    checkpoints = cfg.checkpoints
    block = len(reps)

    f_lower = np.empty((block, n))
    f_upper = np.empty((block, n))
    f_klo = np.empty((block, n))
    f_khi = np.empty((block, n))
    g_lower = np.empty((block, n))
    g_upper = np.empty((block, n))
    g_klo = np.empty((block, n))
    g_khi = np.empty((block, n))
    start = np.empty((block, n))
    for j, rep in enumerate(reps):
        rng = _stream(cfg.base_seed, cfg.seed_prefix, rep, _MODEL)
        bounds = cfg.bounds_sampler(rng) if cfg.bounds_sampler is not None else template.bounds
        f_knots, g_knots = _sample_knot_pairs(template, bounds, rng)
        f_lower[j] = bounds.f_minus
        f_upper[j] = bounds.f_plus
        f_klo[j] = f_knots[:, 0]
        f_khi[j] = f_knots[:, 1]
        g_lower[j] = bounds.g_minus
        g_upper[j] = bounds.g_plus
        g_klo[j] = g_knots[:, 0]
        g_khi[j] = g_knots[:, 1]
        start[j] = cfg.initial.draw(rng, n)

    f_table = CurveTable(
        lower=f_lower, upper=f_upper, knot_low=f_klo, knot_high=f_khi,
        falling=template.f_direction == "non-increasing",
        sigmoid=template.f_shape == "sigmoid",
        reversal=np.nan if template.f_reversal is None else template.f_reversal,
    )
    g_table = CurveTable(
        lower=g_lower, upper=g_upper, knot_low=g_klo, knot_high=g_khi,
        falling=template.g_direction == "non-increasing",
        sigmoid=template.g_shape == "sigmoid",
        reversal=np.nan,
    )

    noise = np.empty((block, horizon, n))
    for j, rep in enumerate(reps):
        noise[j] = sample_noise(template.noise, _stream(cfg.base_seed, cfg.seed_prefix, rep, _NOISE), (horizon, n))
    select_keys = None
    if policy.kind == "random":
        select_keys = np.empty((block, horizon, n))
        for j, rep in enumerate(reps):
            select_keys[j] = _stream(cfg.base_seed, cfg.seed_prefix, rep, _SELECT).random((horizon, n))

    welfare = start.copy()
    start_mean = start.mean(axis=1)
    n_checkpoints = len(checkpoints)
    social = np.empty((block, n_checkpoints))
    gap = np.empty((block, n_checkpoints))
    window = max(1, math.ceil(horizon / 10))
    window_start = horizon - window
    counts = np.zeros((block, n))
    proportional = policy.kind in PROPORTIONAL_KINDS
    cp_index = 0
    for t in range(1, horizon + 1):
        returns = f_table.evaluate(welfare)
        decays = g_table.evaluate(welfare)
        if proportional:
            allocation = _batch_softmax(policy.kind, welfare)
        elif policy.kind == "random":
            allocation = _batch_topm(select_keys[:, t - 1], welfare, budget, "lowest-index")
        else:
            scores = _batch_scores(policy.kind, welfare, returns, decays)
            allocation = _batch_topm(scores, welfare, budget, policy.resolved_tie_break)
        welfare = welfare + allocation * returns - (1.0 - allocation) * decays + noise[:, t - 1]
        if t > window_start:
            counts += allocation
        if cp_index < n_checkpoints and t == checkpoints[cp_index]:
            social[:, cp_index] = (welfare.mean(axis=1) - start_mean) / t
            gap[:, cp_index] = welfare.max(axis=1) - welfare.min(axis=1)
            cp_index += 1

    rates = (welfare - start) / horizon
    threshold = 0.95 * window - 1e-9
    top = np.argsort(-counts, axis=1, kind="stable")[:, :budget]
    winner_sets = tuple(
        tuple(sorted(int(i) for i in top[r] if counts[r, i] >= threshold))
        for r in range(block)
    )
    return {
        "social": social,
        "gap": gap,
        "rates": rates,
        "winner_sets": winner_sets,
    }


def _run_block_star(args) -> dict:
    return _run_block(*args)


def _partition_reps(cfg: ExperimentConfig, jobs: int) -> list[range]:
    per_block = max(1, _NOISE_BUDGET_FLOATS // max(1, cfg.horizon * cfg.template.n))
    if jobs > 1:
        per_block = min(per_block, math.ceil(cfg.replications / jobs))
    return [
        range(lo, min(lo + per_block, cfg.replications))
        for lo in range(0, cfg.replications, per_block)
    ]


def run_trajectory(cfg: ExperimentConfig, policy: PolicySpec, jobs: int = 1) -> TrajectoryResult:
    """Simulate every replication of one policy and collect its outcomes."""
    if isinstance(jobs, bool) or not isinstance(jobs, (int, np.integer)) or jobs < 1:
        raise ValueError(f"jobs must be a positive integer, got {jobs!r}")
    blocks = _partition_reps(cfg, jobs)
    if jobs == 1 or len(blocks) == 1:
        outputs = [_run_block(cfg, policy, list(block)) for block in blocks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_block_star, [(cfg, policy, list(b)) for b in blocks]))
    social = np.concatenate([out["social"] for out in outputs], axis=0)
    gap = np.concatenate([out["gap"] for out in outputs], axis=0)
    rates = np.concatenate([out["rates"] for out in outputs], axis=0)
    winner_sets = tuple(ws for out in outputs for ws in out["winner_sets"])
    template = cfg.template
    standard_model = (
        template.f_direction == "non-decreasing"
        and template.g_direction == "non-increasing"
        and template.f_reversal is None
    )
    prediction = None
    if cfg.bounds_sampler is None and standard_model:
        prediction = policy_rate_prediction(policy, template.bounds)
    return TrajectoryResult(
        policy=policy.label,
        tie_break=policy.resolved_tie_break if policy.kind in SCORED_KINDS else None,
        checkpoints=cfg.checkpoints,
        horizon=cfg.horizon,
        replications=cfg.replications,
        base_seed=cfg.base_seed,
        social=social,
        gap=gap,
        individual_rates=rates,
        winner_sets=winner_sets,
        predicted_average=None if prediction is None else float(prediction.average),
        predicted_rates=None if prediction is None else prediction.rates,
        prediction_regime=None if prediction is None else prediction.regime,
    )


def compare_policies(cfg: ExperimentConfig, jobs: int = 1) -> dict[str, TrajectoryResult]:
    """Run every configured policy under common random numbers."""
    return {policy.label: run_trajectory(cfg, policy, jobs=jobs) for policy in cfg.policies}


@dataclass(frozen=True, eq=False)
class SweepConfig:
    """Heterogeneous-bounds sweep over a (b, sigma) grid."""

    b_grid: tuple[float, ...]
    sigma_grid: tuple[float, ...]
    f_minus: float
    f_plus: float
    g_plus: float
    n: int = 50
    budget: int = 1
    replications: int = 20
    horizon: int = 2000
    early_checkpoint: int = 10
    base_seed: int = 0
    knot_range: float = 20.0
    fixed_knots: tuple[tuple[float, float], tuple[float, float]] | None = None
    require_fg_increasing: bool = False
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    initial: InitialWelfareSpec = field(default_factory=InitialWelfareSpec)
    experiment_id: str = "sweep"

    def __post_init__(self) -> None:
        b_grid = tuple(float(b) for b in self.b_grid)
        sigma_grid = tuple(float(s) for s in self.sigma_grid)
        if not b_grid or not sigma_grid:
            raise ValueError("b_grid and sigma_grid must not be empty")
        if any(not 0.0 < b <= 1.0 for b in b_grid):
            raise ValueError(f"b values must lie in (0, 1], got {b_grid}")
        if any(s < 0 or not math.isfinite(s) for s in sigma_grid):
            raise ValueError(f"sigma values must be finite and non-negative, got {sigma_grid}")
        if not (0 < self.f_minus <= self.f_plus and 0 < self.g_plus):
            raise ValueError("base bounds must be positive with f_minus <= f_plus")
        for name in ("n", "budget", "replications", "horizon", "early_checkpoint"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.budget > self.n:
            raise ValueError(f"budget {self.budget} exceeds population size {self.n}")
        if self.early_checkpoint >= self.horizon:
            raise ValueError("early_checkpoint must lie before the horizon")
        if isinstance(self.base_seed, bool) or not isinstance(self.base_seed, (int, np.integer)) or self.base_seed < 0:
            raise ValueError(f"base_seed must be a non-negative integer, got {self.base_seed!r}")
        object.__setattr__(self, "b_grid", b_grid)
        object.__setattr__(self, "sigma_grid", sigma_grid)


@dataclass(frozen=True)
class _HeteroSampler:
    """Picklable per-replication bound sampler for one sweep cell."""

    n: int
    budget: int
    f_minus: float
    f_plus: float
    g_plus: float
    b: float
    sigma: float

    def __call__(self, rng: np.random.Generator) -> BoundSet:
        return sample_heterogeneous_bounds(
            rng, self.n, self.budget, self.f_minus, self.f_plus, self.g_plus,
            self.b, self.sigma,
        )


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Win-rate matrices of min-u over max-u across the sweep grid."""

    b_grid: tuple[float, ...]
    sigma_grid: tuple[float, ...]
    early_checkpoint: int
    horizon: int
    replications: int
    win_early: np.ndarray  # (b, sigma); NaN marks infeasible cells
    win_final: np.ndarray
    n_reps: np.ndarray  # completed replications per cell (0 for gaps)
    experiment_id: str = "sweep"


def _sweep_cell(cfg: SweepConfig, bi: int, si: int) -> tuple[float, float, int]:
    b = cfg.b_grid[bi]
    sigma = cfg.sigma_grid[si]
    base_bounds = BoundSet.uniform(
        cfg.n, cfg.budget, cfg.f_minus, cfg.f_plus, b * cfg.g_plus, cfg.g_plus
    )
    template = ModelTemplate(
        bounds=base_bounds,
        knot_range=cfg.knot_range,
        fixed_knots=cfg.fixed_knots,
        require_fg_increasing=cfg.require_fg_increasing,
        noise=cfg.noise,
    )
    cell_cfg = ExperimentConfig(
        template=template,
        initial=cfg.initial,
        policies=(PolicySpec("min-u"), PolicySpec("max-u")),
        horizon=cfg.horizon,
        replications=cfg.replications,
        base_seed=cfg.base_seed,
        checkpoints=(cfg.early_checkpoint, cfg.horizon),
        experiment_id=f"{cfg.experiment_id}[b={b:g},sigma={sigma:g}]",
        seed_prefix=(bi, si),
        bounds_sampler=_HeteroSampler(
            cfg.n, cfg.budget, cfg.f_minus, cfg.f_plus, cfg.g_plus, b, sigma
        ),
    )
    try:
        low = run_trajectory(cell_cfg, cell_cfg.policies[0])
        high = run_trajectory(cell_cfg, cell_cfg.policies[1])
    except InfeasibleModelError:
        return (math.nan, math.nan, 0)
    win_early = float(np.mean(low.social[:, 0] > high.social[:, 0]))
    win_final = float(np.mean(low.social[:, -1] > high.social[:, -1]))
    return (win_early, win_final, cfg.replications)


def _sweep_cell_star(args) -> tuple[float, float, int]:
    return _sweep_cell(*args)


def heterogeneity_sweep(cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """Run min-u against max-u on every (b, sigma) cell of the sweep grid."""
    if isinstance(jobs, bool) or not isinstance(jobs, (int, np.integer)) or jobs < 1:
        raise ValueError(f"jobs must be a positive integer, got {jobs!r}")
    nb, ns = len(cfg.b_grid), len(cfg.sigma_grid)
    cells = [(bi, si) for bi in range(nb) for si in range(ns)]
    if jobs == 1:
        outcomes = [_sweep_cell(cfg, bi, si) for bi, si in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_cell_star, [(cfg, bi, si) for bi, si in cells]))
    win_early = np.empty((nb, ns))
    win_final = np.empty((nb, ns))
    n_reps = np.zeros((nb, ns), dtype=int)
    for (bi, si), (early, final, reps) in zip(cells, outcomes):
        win_early[bi, si] = early
        win_final[bi, si] = final
        n_reps[bi, si] = reps
    return SweepResult(
        b_grid=cfg.b_grid,
        sigma_grid=cfg.sigma_grid,
        early_checkpoint=cfg.early_checkpoint,
        horizon=cfg.horizon,
        replications=cfg.replications,
        win_early=win_early,
        win_final=win_final,
        n_reps=n_reps,
        experiment_id=cfg.experiment_id,
    )


@dataclass(frozen=True, eq=False)
class GridCell:
    """Outcome of one curve-direction cell of the monotonicity grid."""

    f_direction: str
    g_direction: str
    outcome: str
    difference: float
    pooled_se: float
    min_u: TrajectoryResult
    max_u: TrajectoryResult


@dataclass(frozen=True, eq=False)
class GridResult:
    """min-u versus max-u classification over the 3x3 direction grid."""

    cells: dict[tuple[str, str], GridCell]
    horizon: int
    replications: int

    def outcome(self, f_direction: str, g_direction: str) -> str:
        return self.cells[(f_direction, g_direction)].outcome


def _grid_cell_config(cfg: ExperimentConfig, fi: int, gi: int) -> ExperimentConfig:
    template = cfg.template
    bounds = template.bounds
    f_dir = GRID_DIRECTIONS[fi]
    g_dir = GRID_DIRECTIONS[gi]
    f_lo, f_hi = float(bounds.f_minus[0]), float(bounds.f_plus[0])
    g_lo, g_hi = float(bounds.g_minus[0]), float(bounds.g_plus[0])
    if f_dir == "constant":
        f_lo = f_hi = 0.5 * (f_lo + f_hi)  # bounds collapse to the midpoint
    if g_dir == "constant":
        g_lo = g_hi = 0.5 * (g_lo + g_hi)
    cell_bounds = BoundSet.uniform(bounds.n, bounds.budget, f_lo, f_hi, g_lo, g_hi)
    if not survival_holds(cell_bounds):
        raise ValueError(
            f"monotonicity grid cell (f={f_dir}, g={g_dir}) falls outside the survival regime"
        )
    cell_template = ModelTemplate(
        bounds=cell_bounds,
        f_shape="constant" if f_dir == "constant" else template.f_shape,
        g_shape="constant" if g_dir == "constant" else template.g_shape,
        f_direction="non-increasing" if f_dir == "decreasing" else "non-decreasing",
        g_direction="non-decreasing" if g_dir == "increasing" else "non-increasing",
        knot_range=template.knot_range,
        noise=template.noise,
    )
    return ExperimentConfig(
        template=cell_template,
        initial=cfg.initial,
        policies=(PolicySpec("min-u"), PolicySpec("max-u")),
        horizon=cfg.horizon,
        replications=cfg.replications,
        base_seed=cfg.base_seed,
        checkpoints=cfg.checkpoints,
        experiment_id=f"f={f_dir},g={g_dir}",
        seed_prefix=(*cfg.seed_prefix, fi, gi),
    )


def _grid_cell(cfg: ExperimentConfig, fi: int, gi: int) -> GridCell:
    cell_cfg = _grid_cell_config(cfg, fi, gi)
    low = run_trajectory(cell_cfg, cell_cfg.policies[0])
    high = run_trajectory(cell_cfg, cell_cfg.policies[1])
    difference = float(low.social_mean[-1] - high.social_mean[-1])
    pooled_se = float(math.hypot(low.social_se[-1], high.social_se[-1]))
    # 1e-9 floors the tie band: exact-cancellation cells differ only by
    # floating-point summation order, which can undercut 3 standard errors
    tie_band = max(3.0 * pooled_se, 1e-9)
    if difference > tie_band:
        outcome = "rawlsian-better"
    elif difference < -tie_band:
        outcome = "utilitarian-better"
    else:
        outcome = "tie"
    return GridCell(
        f_direction=GRID_DIRECTIONS[fi],
        g_direction=GRID_DIRECTIONS[gi],
        outcome=outcome,
        difference=difference,
        pooled_se=pooled_se,
        min_u=low,
        max_u=high,
    )


def _grid_cell_star(args) -> GridCell:
    return _grid_cell(*args)


def monotonicity_grid(cfg: ExperimentConfig, jobs: int = 1) -> GridResult:
    """Classify min-u against max-u across all curve-direction combinations.

    Requires uniform bounds; every cell must satisfy the survival condition
    (constant directions collapse their bounds to the midpoint first).
    """
    if not cfg.template.bounds.is_uniform:
        raise ValueError("the monotonicity grid requires uniform bounds")
    if isinstance(jobs, bool) or not isinstance(jobs, (int, np.integer)) or jobs < 1:
        raise ValueError(f"jobs must be a positive integer, got {jobs!r}")
    pairs = [(fi, gi) for fi in range(3) for gi in range(3)]
    if jobs == 1:
        cells = [_grid_cell(cfg, fi, gi) for fi, gi in pairs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_grid_cell_star, [(cfg, fi, gi) for fi, gi in pairs]))
    return GridResult(
        cells={(c.f_direction, c.g_direction): c for c in cells},
        horizon=cfg.horizon,
        replications=cfg.replications,
    )


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

ALL_POLICY_SPECS = tuple(
    PolicySpec(kind)
    for kind in ("min-u", "max-u", "max-f", "max-g", "max-fg", "random", "prop-max-u", "prop-min-u")
)


def survival_preset(
    *,
    policies: tuple[PolicySpec, ...] = ALL_POLICY_SPECS,
    horizon: int = 6000,
    replications: int = 30,
    base_seed: int = 7,
    checkpoints: tuple[int, ...] | None = None,
) -> ExperimentConfig:
    """Uniform survival-regime population: one treatment slot, 50 individuals.

    Strong returns against weak decays keep the budget-weighted margin
    positive even with a single slot, so lowest-welfare style policies lift
    everyone while highest-welfare style policies fixate on one winner.
    """
    bounds = BoundSet.uniform(50, 1, 3.0, 4.0, 0.02, 0.05)
    template = ModelTemplate(
        bounds=bounds,
        knot_range=20.0,
        require_fg_increasing=True,
        noise=NoiseSpec("capped-gaussian", sigma=0.5, cap=5.0),
    )
    initial = InitialWelfareSpec(source="capped-normal", mean=15.0, std=3.0, low=5.0, high=19.8)
    return ExperimentConfig(
        template=template,
        initial=initial,
        policies=policies,
        horizon=horizon,
        replications=replications,
        base_seed=base_seed,
        checkpoints=checkpoints,
        experiment_id="survival",
    )


def ruin_preset(
    *,
    policies: tuple[PolicySpec, ...] = (PolicySpec("min-u"), PolicySpec("max-u")),
    horizon: int = 3000,
    replications: int = 30,
    base_seed: int = 7,
) -> ExperimentConfig:
    """Uniform ruin-regime population: decays overwhelm one treatment slot."""
    bounds = BoundSet.uniform(50, 1, 1.0, 3.0, 0.4, 0.6)
    template = ModelTemplate(
        bounds=bounds,
        knot_range=20.0,
        noise=NoiseSpec("capped-gaussian", sigma=0.5, cap=5.0),
    )
    initial = InitialWelfareSpec(source="capped-normal", mean=10.0, std=3.0, low=2.0, high=19.5)
    return ExperimentConfig(
        template=template,
        initial=initial,
        policies=policies,
        horizon=horizon,
        replications=replications,
        base_seed=base_seed,
        experiment_id="ruin",
    )


def reversal_preset(
    *,
    horizon: int = 1500,
    replications: int = 50,
    base_seed: int = 7,
) -> ExperimentConfig:
    """Identical curves whose treatment effect reverses past a threshold.

    Returns rise to their peak at the reversal threshold and fall
    symmetrically beyond it, so policies chasing the combined effect park
    the population around the threshold while the lowest-welfare policy
    keeps lifting from below.  Both policies break ties on lowest welfare.
    """
    bounds = BoundSet.uniform(50, 10, 3.0, 4.0, 0.2, 0.5)
    template = ModelTemplate(
        bounds=bounds,
        fixed_knots=((2.0, 8.0), (2.0, 8.0)),
        f_reversal=8.0,
        noise=NoiseSpec("capped-gaussian", sigma=0.5, cap=5.0),
    )
    initial = InitialWelfareSpec(source="capped-normal", mean=8.0, std=3.0, low=2.0, high=14.0)
    return ExperimentConfig(
        template=template,
        initial=initial,
        policies=(
            PolicySpec("min-u", tie_break="lowest-welfare"),
            PolicySpec("max-fg", tie_break="lowest-welfare"),
        ),
        horizon=horizon,
        replications=replications,
        base_seed=base_seed,
        experiment_id="reversal",
    )


def grid_preset(
    *,
    horizon: int = 3000,
    replications: int = 20,
    base_seed: int = 7,
) -> ExperimentConfig:
    """Base configuration for the curve-direction grid.

    Initial welfare starts above the knot band so constant-decay cells
    produce exactly matching social increments under both policies, making
    their ties exact rather than transient-limited.
    """
    bounds = BoundSet.uniform(50, 10, 3.0, 4.0, 0.2, 0.5)
    template = ModelTemplate(
        bounds=bounds,
        knot_range=20.0,
        noise=NoiseSpec("capped-gaussian", sigma=0.5, cap=5.0),
    )
    initial = InitialWelfareSpec(source="capped-normal", mean=35.0, std=2.0, low=30.0, high=40.0)
    return ExperimentConfig(
        template=template,
        initial=initial,
        policies=(PolicySpec("min-u"), PolicySpec("max-u")),
        horizon=horizon,
        replications=replications,
        base_seed=base_seed,
        experiment_id="grid",
    )


def sweep_preset(
    *,
    replications: int = 20,
    horizon: int = 2000,
    base_seed: int = 7,
) -> SweepConfig:
    """8x8 heterogeneity sweep around a ten-slot survival-regime base.

    The return band sits above the decay band and initial welfare spans only
    the return ramp, so at the start every decay sits at its floor while
    returns still favour the well-off: the highest-welfare policy leads at
    early checkpoints, and the lowest-welfare policy overtakes as the
    untreated sink into the decay ramp.
    """
    return SweepConfig(
        b_grid=(0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85),
        sigma_grid=(0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07),
        f_minus=1.0,
        f_plus=1.5,
        g_plus=0.2,
        n=50,
        budget=10,
        replications=replications,
        horizon=horizon,
        early_checkpoint=10,
        base_seed=base_seed,
        fixed_knots=((10.0, 30.0), (0.0, 8.0)),
        noise=NoiseSpec("capped-gaussian", sigma=0.5, cap=5.0),
        initial=InitialWelfareSpec(source="capped-normal", mean=20.0, std=5.0, low=12.0, high=28.0),
        experiment_id="sweep",
    )
