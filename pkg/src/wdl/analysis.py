"""Closed-form analysis: regime tests, predicted growth rates, ruin bounds.

The central quantity is the budget-weighted margin

    zeta(x, y, M) = (M - sum_i y_i / (x_i + y_i)) / sum_j 1 / (x_j + y_j)

evaluated on per-individual bound vectors.  ``zeta((f-), (g+), M) > 0`` is
the survival condition (every individual's welfare diverges upward under the
lowest-welfare policy); ``zeta((f+), (g-), M) < 0`` is the ruin condition
(welfare diverges downward for the bulk of the population no matter who is
treated).  The two conditions are mutually exclusive.

The module also carries the random-walk ruin toolkit used to study
individual welfare in the untreated regime: the adjustment coefficient
``r*`` solving ``E[exp(-r Z)] = 1`` for an integer increment distribution
``Z``, the exponential bound ``exp(-r* u)`` on the probability of ever
hitting zero from ``u``, and a Monte-Carlo estimator of that probability.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

RATE_FAMILIES = ("rawlsian", "utilitarian", "random")
WEIGHT_VARIANTS = ("survival", "ruin")


class IndeterminateRegimeError(ValueError):
    """Raised when neither the survival nor the ruin condition holds."""


class NoPositiveRootError(ValueError):
    """Raised when the adjustment equation has no positive root."""


class RuinImpossibleError(ValueError):
    """Raised when the increment distribution can never reach zero."""


@dataclass(frozen=True, eq=False)
class BoundSet:
    """Per-individual curve bounds plus the allocation budget."""

    f_minus: np.ndarray
    f_plus: np.ndarray
    g_minus: np.ndarray
    g_plus: np.ndarray
    budget: int

    def __post_init__(self) -> None:
        arrays = {}
        for name in ("f_minus", "f_plus", "g_minus", "g_plus"):
            value = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            if value.ndim != 1 or value.size == 0:
                raise ValueError(f"{name} must be a non-empty 1-D array")
            if not np.all(np.isfinite(value)) or np.any(value <= 0.0):
                raise ValueError(f"{name} must contain finite positive values")
            arrays[name] = value
        sizes = {a.size for a in arrays.values()}
        if len(sizes) != 1:
            raise ValueError(f"bound vectors must share one length, got {sorted(sizes)}")
        if np.any(arrays["f_minus"] > arrays["f_plus"]):
            raise ValueError("f_minus must not exceed f_plus")
        if np.any(arrays["g_minus"] > arrays["g_plus"]):
            raise ValueError("g_minus must not exceed g_plus")
        n = arrays["f_minus"].size
        if isinstance(self.budget, bool) or not isinstance(self.budget, (int, np.integer)):
            raise ValueError(f"budget must be an integer, got {self.budget!r}")
        if not 1 <= self.budget <= n:
            raise ValueError(f"budget must lie in [1, {n}], got {self.budget!r}")
        for name, value in arrays.items():
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "budget", int(self.budget))

    @property
    def n(self) -> int:
        return self.f_minus.size

    @property
    def is_uniform(self) -> bool:
        """True when every individual shares the same four bounds."""
        return all(
            np.all(vec == vec[0])
            for vec in (self.f_minus, self.f_plus, self.g_minus, self.g_plus)
        )

    @classmethod
    def uniform(
        cls, n: int, budget: int, f_minus: float, f_plus: float, g_minus: float, g_plus: float
    ) -> "BoundSet":
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"n must be a positive integer, got {n!r}")
        return cls(
            np.full(n, float(f_minus)),
            np.full(n, float(f_plus)),
            np.full(n, float(g_minus)),
            np.full(n, float(g_plus)),
            budget,
        )

    @classmethod
    def from_model(cls, model) -> "BoundSet":
        """Extract the bound vectors of a :class:`~wdl.model.PopulationModel`."""
        return cls(
            np.array([c.lower_bound for c in model.return_curves]),
            np.array([c.upper_bound for c in model.return_curves]),
            np.array([c.lower_bound for c in model.decay_curves]),
            np.array([c.upper_bound for c in model.decay_curves]),
            model.budget,
        )


def zeta(x, y, budget: int) -> float:
    """Budget-weighted margin of the vectors ``x`` against ``y``.

    Positive exactly when ``budget`` exceeds ``sum_i y_i / (x_i + y_i)``.
    For uniform vectors it reduces to ``(M/N) x - ((N-M)/N) y``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.size == 0 or x.size != y.size:
        raise ValueError("zeta needs two non-empty 1-D vectors of equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("zeta inputs must be finite")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("zeta inputs must be positive")
    if isinstance(budget, bool) or not isinstance(budget, (int, np.integer)):
        raise ValueError(f"budget must be an integer, got {budget!r}")
    if not 1 <= budget <= x.size:
        raise ValueError(f"budget must lie in [1, {x.size}], got {budget!r}")
    denominator = x + y
    return float((budget - np.sum(y / denominator)) / np.sum(1.0 / denominator))


def survival_margin(bounds: BoundSet) -> float:
    """zeta of the worst returns against the worst decays."""
    return zeta(bounds.f_minus, bounds.g_plus, bounds.budget)


def ruin_margin(bounds: BoundSet) -> float:
    """zeta of the best returns against the mildest decays."""
    return zeta(bounds.f_plus, bounds.g_minus, bounds.budget)


def survival_holds(bounds: BoundSet) -> bool:
    return survival_margin(bounds) > 0.0


def ruin_holds(bounds: BoundSet) -> bool:
    return ruin_margin(bounds) < 0.0


@dataclass(frozen=True, eq=False)
class RatePrediction:
    """Asymptotic per-step welfare growth predicted for a policy family."""

    family: str
    regime: str
    average: float
    rates: np.ndarray | None = None
    winners: tuple[int, ...] | None = None


def predicted_rates(
    family: str, bounds: BoundSet, winners: Iterable[int] | None = None
) -> RatePrediction:
    """Predict long-run per-individual growth rates for a policy family.

    ``rawlsian`` covers the lowest-welfare style policies: every individual
    grows at ``zeta((f+), (g-), M)`` in the survival regime and shrinks at
    ``zeta((f-), (g+), M)`` in the ruin regime; outside both regimes the
    prediction is indeterminate.  ``utilitarian`` covers the highest-welfare
    style policies in any regime: with a winner set of the budget's size the
    winners grow at their ``f+`` and everyone else shrinks at ``-g+``;
    without a winner set only the population average is defined, and only
    for uniform bounds.  ``random`` requires uniform bounds and the survival
    regime and predicts ``(M/N) f+ - ((N-M)/N) g-`` for everyone.
    """
    if family not in RATE_FAMILIES:
        raise ValueError(f"unknown rate family {family!r}; expected one of {RATE_FAMILIES}")
    n = bounds.n
    budget = bounds.budget
    if winners is not None:
        if family != "utilitarian":
            raise ValueError(f"winner sets only apply to the utilitarian family, not {family!r}")
        winner_tuple = tuple(sorted({int(i) for i in winners}))
        if len(winner_tuple) != budget:
            raise ValueError(
                f"winner set must contain exactly budget={budget} distinct indices, "
                f"got {len(winner_tuple)}"
            )
        if winner_tuple and (winner_tuple[0] < 0 or winner_tuple[-1] >= n):
            raise ValueError(f"winner indices must lie in [0, {n - 1}]")
    if family == "rawlsian":
        if survival_holds(bounds):
            value = zeta(bounds.f_plus, bounds.g_minus, budget)
            regime = "survival"
        elif ruin_holds(bounds):
            value = zeta(bounds.f_minus, bounds.g_plus, budget)
            regime = "ruin"
        else:
            raise IndeterminateRegimeError(
                "indeterminate regime: neither the survival nor the ruin condition holds"
            )
        rates = np.full(n, value)
        rates.setflags(write=False)
        return RatePrediction(family, regime, value, rates)
    if family == "utilitarian":
        if winners is None:
            if not bounds.is_uniform:
                raise ValueError(
                    "utilitarian prediction without a winner set requires uniform bounds"
                )
            average = (
                budget * bounds.f_plus[0] - (n - budget) * bounds.g_plus[0]
            ) / n
            return RatePrediction(family, "any", average)
        member = np.zeros(n, dtype=bool)
        member[list(winner_tuple)] = True
        rates = np.where(member, bounds.f_plus, -bounds.g_plus)
        rates.setflags(write=False)
        return RatePrediction(family, "any", float(rates.mean()), rates, winner_tuple)
    # random family
    if not bounds.is_uniform:
        raise ValueError("random-policy prediction requires uniform bounds")
    if not survival_holds(bounds):
        raise IndeterminateRegimeError(
            "indeterminate regime: the random-policy prediction needs the survival condition"
        )
    value = (budget * bounds.f_plus[0] - (n - budget) * bounds.g_minus[0]) / n
    rates = np.full(n, value)
    rates.setflags(write=False)
    return RatePrediction(family, "survival", value, rates)


def welfare_weights(bounds: BoundSet, variant: str = "survival") -> np.ndarray:
    """Normalised weights used by the weighted social welfare functionals.

    The ``survival`` variant weights individual ``i`` by ``1/(f-_i + g+_i)``,
    the ``ruin`` variant by ``1/(f+_i + g-_i)``; both normalise to sum 1.
    """
    if variant not in WEIGHT_VARIANTS:
        raise ValueError(f"unknown weight variant {variant!r}; expected one of {WEIGHT_VARIANTS}")
    if variant == "survival":
        raw = 1.0 / (bounds.f_minus + bounds.g_plus)
    else:
        raw = 1.0 / (bounds.f_plus + bounds.g_minus)
    return raw / raw.sum()


def weighted_welfare(welfare, bounds: BoundSet, variant: str = "survival") -> float:
    """Weighted average welfare under :func:`welfare_weights`."""
    welfare = np.asarray(welfare, dtype=float)
    if welfare.shape != (bounds.n,):
        raise ValueError(f"welfare must have shape ({bounds.n},), got {welfare.shape}")
    return float(welfare_weights(bounds, variant) @ welfare)


def _validate_increments(increments) -> tuple[np.ndarray, np.ndarray]:
    """Normalise an integer increment distribution to (values, probabilities)."""
    if isinstance(increments, Mapping):
        items = list(increments.items())
    elif isinstance(increments, Iterable):
        items = list(increments)
    else:
        raise ValueError(f"increments must be a mapping or pair iterable, got {increments!r}")
    if not items:
        raise ValueError("increment distribution must not be empty")
    values: list[int] = []
    probs: list[float] = []
    seen: set[int] = set()
    for key, prob in items:
        if isinstance(key, bool) or not isinstance(key, (int, np.integer)):
            raise ValueError(f"increment values must be integers, got {key!r}")
        if not (isinstance(prob, (int, float)) and math.isfinite(prob)) or prob < 0:
            raise ValueError(f"increment probabilities must be finite and non-negative, got {prob!r}")
        if key in seen:
            raise ValueError(f"duplicate increment value {key!r}")
        seen.add(int(key))
        if prob > 0.0:
            values.append(int(key))
            probs.append(float(prob))
    if not values:
        raise ValueError("increment distribution needs at least one positive-probability value")
    total = sum(probs)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"increment probabilities must sum to 1, got {total!r}")
    order = np.argsort(values)
    return np.array(values, dtype=float)[order], np.array(probs, dtype=float)[order]


@dataclass(frozen=True)
class AdjustmentResult:
    """Positive root of the adjustment equation with solve diagnostics."""

    r_star: float
    residual: float
    iterations: int


def adjustment_coefficient(
    increments, tolerance: float = 1e-10, max_iterations: int = 200
) -> AdjustmentResult:
    """Solve ``E[exp(-r Z)] = 1`` for ``r > 0``.

    ``increments`` maps integer step values to probabilities.  The transform
    equals 1 at r=0, dips below 1 when the mean step is positive, and blows
    up again through the negative support, so a positive root exists exactly
    when the mean is positive and some mass sits below zero.  The root is
    bracketed by doubling from (0, 1], narrowed by bisection, and polished
    with a few Newton steps.
    """
    values, probs = _validate_increments(increments)
    mean = float(values @ probs)
    if mean <= 0.0:
        raise NoPositiveRootError(
            f"no positive root: mean increment {mean:g} is not positive"
        )
    if values.min() >= 0.0:
        raise RuinImpossibleError("ruin impossible: increments have no negative support")

    def transform(r: float) -> float:
        with np.errstate(over="ignore"):
            return float(np.sum(probs * np.exp(-r * values)))

    iterations = 0
    lo, hi = 0.0, 1.0
    while transform(hi) <= 1.0:
        lo, hi = hi, 2.0 * hi
        iterations += 1
        if iterations > 64:  # unreachable for a validated distribution
            raise NoPositiveRootError("no positive root: transform never exceeds 1")
    for _ in range(max_iterations):
        iterations += 1
        mid = 0.5 * (lo + hi)
        if transform(mid) <= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    root = 0.5 * (lo + hi)
    for _ in range(3):  # Newton polish drives the residual to machine level
        iterations += 1
        derivative = float(np.sum(-values * probs * np.exp(-root * values)))
        if derivative == 0.0:
            break
        candidate = root - (transform(root) - 1.0) / derivative
        if candidate <= 0.0:
            break
        root = candidate
    residual = abs(transform(root) - 1.0)
    if residual > tolerance:
        raise ArithmeticError(
            f"adjustment solve stalled: residual {residual:g} above tolerance {tolerance:g}"
        )
    return AdjustmentResult(float(root), residual, iterations)


def lundberg_bound(initial_welfare: float, r_star: float) -> float:
    """Exponential upper bound ``exp(-r* u)`` on the ruin probability from ``u``."""
    if not (isinstance(initial_welfare, (int, float)) and math.isfinite(initial_welfare)):
        raise ValueError(f"initial_welfare must be a finite number, got {initial_welfare!r}")
    if initial_welfare <= 0:
        raise ValueError(f"initial_welfare must be positive, got {initial_welfare!r}")
    if not (isinstance(r_star, (int, float)) and math.isfinite(r_star)) or r_star <= 0:
        raise ValueError(f"r_star must be a finite positive number, got {r_star!r}")
    return math.exp(-r_star * initial_welfare)


@dataclass(frozen=True)
class RuinEstimate:
    """Monte-Carlo estimate of the probability of hitting zero."""

    probability: float
    standard_error: float
    trials: int
    ruined: int
    horizon: int


def estimate_ruin_probability(
    increments,
    initial_welfare: float,
    horizon: int = 10_000,
    trials: int = 100_000,
    rng=None,
    stop_height="auto",
    chunk_steps: int = 128,
    trial_block: int = 20_000,
) -> RuinEstimate:
    """Estimate the probability that a random walk from ``initial_welfare``
    hits zero or below within ``horizon`` steps.

    ``stop_height="auto"`` retires walks once they climb far enough that the
    residual ruin probability is below ~1e-12 (using the adjustment
    coefficient when one exists), which biases the estimate by far less than
    its Monte-Carlo standard error while keeping long horizons cheap.  Pass
    ``stop_height=None`` to simulate every surviving walk to the horizon.
    """
    values, probs = _validate_increments(increments)
    if not (isinstance(initial_welfare, (int, float)) and math.isfinite(initial_welfare)):
        raise ValueError(f"initial_welfare must be a finite number, got {initial_welfare!r}")
    if initial_welfare <= 0:
        raise ValueError(f"initial_welfare must be positive, got {initial_welfare!r}")
    for name, value in (("horizon", horizon), ("trials", trials),
                        ("chunk_steps", chunk_steps), ("trial_block", trial_block)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
    if values.min() >= 0.0:
        # the walk can never reach zero; exact answer, zero variance
        return RuinEstimate(0.0, 0.0, int(trials), 0, int(horizon))
    generator = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    barrier = None
    if stop_height == "auto":
        if float(values @ probs) > 0.0:
            try:
                r_star = adjustment_coefficient(dict(zip(values.astype(int), probs))).r_star
                barrier = float(initial_welfare) + math.ceil(28.0 / r_star)
            except NoPositiveRootError:
                barrier = None
    elif stop_height is not None:
        barrier = float(stop_height)
        if not math.isfinite(barrier) or barrier <= initial_welfare:
            raise ValueError(f"stop_height must exceed initial_welfare, got {stop_height!r}")
    cumulative = np.cumsum(probs)
    cumulative[-1] = 1.0
    ruined_total = 0
    for start in range(0, int(trials), int(trial_block)):
        block = min(int(trial_block), int(trials) - start)
        positions = np.full(block, float(initial_welfare))
        remaining = int(horizon)
        while remaining > 0 and positions.size:
            steps = min(int(chunk_steps), remaining)
            uniforms = generator.random((positions.size, steps))
            draws = values[np.searchsorted(cumulative, uniforms, side="right")]
            paths = positions[:, None] + np.cumsum(draws, axis=1)
            ruined = paths.min(axis=1) <= 0.0
            ruined_total += int(np.count_nonzero(ruined))
            positions = paths[~ruined, -1]
            if barrier is not None and positions.size:
                positions = positions[positions < barrier]
            remaining -= steps
    probability = ruined_total / trials
    standard_error = math.sqrt(probability * (1.0 - probability) / trials)
    return RuinEstimate(probability, standard_error, int(trials), ruined_total, int(horizon))
