"""Bounded monotone response curves.

Each individual in the population model carries two curves: a return curve
(the welfare gain applied when treated) and a decay curve (the loss applied
when untreated).  A curve is pinned to one of its bounds below a knot
interval, pinned to the other bound above it, and monotone in between.
Three shapes are supported:

* ``piecewise-linear`` -- linear ramp between the knots, exactly equal to
  the bounds outside them.
* ``sigmoid`` -- logistic ramp centred between the knots, approaching the
  bounds asymptotically; the knots mark the ~98% saturation points.
* ``constant`` -- degenerate curve whose bounds coincide; it always returns
  that single value.

``lower_bound``/``upper_bound`` always store the infimum and supremum of the
curve regardless of direction.  A ``non-decreasing`` curve ramps from the
lower bound up to the upper bound as welfare grows; a ``non-increasing``
curve ramps down.  An optional ``reversal_threshold`` tau reflects evaluation
around tau (welfare ``u > tau`` evaluates the curve at ``2*tau - u``), which
turns a rising curve into one that rises up to tau and falls symmetrically
past it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

CURVE_SHAPES = ("piecewise-linear", "sigmoid", "constant")
CURVE_DIRECTIONS = ("non-decreasing", "non-increasing")


@dataclass(frozen=True)
class ResponseCurve:
    """One bounded monotone curve with an optional reversal threshold."""

    lower_bound: float
    upper_bound: float
    knot_low: float = 0.0
    knot_high: float = 1.0
    shape: str = "piecewise-linear"
    direction: str = "non-decreasing"
    reversal_threshold: float | None = None

    def __post_init__(self) -> None:
        if self.shape not in CURVE_SHAPES:
            raise ValueError(
                f"unknown curve shape {self.shape!r}; expected one of {CURVE_SHAPES}"
            )
        if self.direction not in CURVE_DIRECTIONS:
            raise ValueError(
                f"unknown curve direction {self.direction!r}; "
                f"expected one of {CURVE_DIRECTIONS}"
            )
        for name in ("lower_bound", "upper_bound", "knot_low", "knot_high"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.lower_bound <= 0.0:
            raise ValueError(f"curve bounds must be positive, got lower_bound={self.lower_bound!r}")
        if self.upper_bound < self.lower_bound:
            raise ValueError(
                f"upper_bound {self.upper_bound!r} must not lie below "
                f"lower_bound {self.lower_bound!r}"
            )
        if self.shape == "constant":
            if self.upper_bound != self.lower_bound:
                raise ValueError("a constant curve requires lower_bound == upper_bound")
        elif not self.knot_low < self.knot_high:
            raise ValueError(
                f"knot_low {self.knot_low!r} must lie strictly below knot_high {self.knot_high!r}"
            )
        if self.reversal_threshold is not None and not math.isfinite(self.reversal_threshold):
            raise ValueError("reversal_threshold must be finite when given")


def constant_curve(value: float) -> ResponseCurve:
    """Curve that returns ``value`` at every welfare level."""
    return ResponseCurve(value, value, shape="constant")


def _eval_packed(welfare, lower, upper, knot_low, knot_high, falling, sigmoid, reversal):
    """Evaluate curves described by broadcastable parameter arrays.

    All parameters broadcast against ``welfare``; ``falling`` and ``sigmoid``
    are boolean, ``reversal`` uses NaN where no reversal applies.
    """
    u = np.asarray(welfare, dtype=float)
    u = np.where(np.isnan(reversal), u, np.where(u > reversal, 2.0 * reversal - u, u))
    span = knot_high - knot_low
    safe_span = np.where(span > 0.0, span, 1.0)
    ramp = np.clip((u - knot_low) / safe_span, 0.0, 1.0)
    if np.any(sigmoid):
        centre = 0.5 * (knot_low + knot_high)
        # knots sit 4 logistic scales from the centre: expit(+-4) ~ 0.982
        ramp = np.where(sigmoid, expit((u - centre) / (safe_span / 8.0)), ramp)
    height = upper - lower
    return np.where(falling, upper - height * ramp, lower + height * ramp)


def eval_curve(curve: ResponseCurve, welfare):
    """Evaluate ``curve`` at ``welfare`` (scalar or array, any shape)."""
    out = _eval_packed(
        welfare,
        curve.lower_bound,
        curve.upper_bound,
        curve.knot_low,
        curve.knot_high,
        curve.direction == "non-increasing",
        curve.shape == "sigmoid",
        np.nan if curve.reversal_threshold is None else curve.reversal_threshold,
    )
    if np.ndim(welfare) == 0:
        return float(out)
    return out


def curve_bounds(curve: ResponseCurve) -> tuple[float, float]:
    """Return the stored (infimum, supremum) of the curve."""
    return (curve.lower_bound, curve.upper_bound)


@dataclass(frozen=True, eq=False)
class CurveTable:
    """Vectorised evaluator for a family of curves.

    Parameter arrays broadcast against the welfare array handed to
    :meth:`evaluate`, so a table built from ``n`` curves evaluates a
    ``(..., n)`` welfare array elementwise: slot ``i`` of the trailing axis is
    evaluated through curve ``i``.  The simulation engine also builds tables
    directly from ``(replications, n)`` parameter arrays.
    """

    lower: np.ndarray
    upper: np.ndarray
    knot_low: np.ndarray
    knot_high: np.ndarray
    falling: np.ndarray
    sigmoid: np.ndarray
    reversal: np.ndarray

    def __post_init__(self) -> None:
        for name in ("lower", "upper", "knot_low", "knot_high", "reversal"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("falling", "sigmoid"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=bool))

    @classmethod
    def from_curves(cls, curves: Sequence[ResponseCurve]) -> "CurveTable":
        if not curves:
            raise ValueError("need at least one curve")
        return cls(
            lower=[c.lower_bound for c in curves],
            upper=[c.upper_bound for c in curves],
            knot_low=[c.knot_low for c in curves],
            knot_high=[c.knot_high for c in curves],
            falling=[c.direction == "non-increasing" for c in curves],
            sigmoid=[c.shape == "sigmoid" for c in curves],
            reversal=[
                np.nan if c.reversal_threshold is None else c.reversal_threshold
                for c in curves
            ],
        )

    def evaluate(self, welfare) -> np.ndarray:
        return _eval_packed(
            welfare,
            self.lower,
            self.upper,
            self.knot_low,
            self.knot_high,
            self.falling,
            self.sigmoid,
            self.reversal,
        )
