"""Population state and one-step welfare dynamics.

Welfare evolves as

    U_i(t+1) = U_i(t) + a_i * f_i(U_i(t)) - (1 - a_i) * g_i(U_i(t)) + xi_i(t)

where ``a`` is the allocation decided by a policy (0/1 entries summing to the
budget, or non-negative weights summing to 1 for proportional policies),
``f_i``/``g_i`` are the individual's return and decay curves, and ``xi`` is an
additive shock.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import CurveTable, ResponseCurve, eval_curve
from .noise import NoiseSpec, sample_noise

ALLOCATION_MODES = ("integer", "proportional")


@dataclass(frozen=True, eq=False)
class PopulationState:
    """Welfare of every individual at one time step."""

    step: int
    welfare: np.ndarray

    def __post_init__(self) -> None:
        if isinstance(self.step, bool) or not isinstance(self.step, (int, np.integer)):
            raise ValueError(f"step must be an integer, got {self.step!r}")
        if self.step < 0:
            raise ValueError(f"step must be non-negative, got {self.step!r}")
        welfare = np.array(self.welfare, dtype=float)
        if welfare.ndim != 1 or welfare.size == 0:
            raise ValueError("welfare must be a non-empty 1-D array")
        welfare.setflags(write=False)
        object.__setattr__(self, "step", int(self.step))
        object.__setattr__(self, "welfare", welfare)

    @property
    def n(self) -> int:
        return self.welfare.size


@dataclass(frozen=True, eq=False)
class AllocationVector:
    """Per-individual treatment weights for one step."""

    weights: np.ndarray
    mode: str = "integer"

    def __post_init__(self) -> None:
        if self.mode not in ALLOCATION_MODES:
            raise ValueError(f"unknown allocation mode {self.mode!r}; expected one of {ALLOCATION_MODES}")
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a non-empty 1-D array")
        if self.mode == "integer":
            if not np.all((weights == 0.0) | (weights == 1.0)):
                raise ValueError("integer allocations must contain only 0 and 1 entries")
        else:
            if np.any(weights < 0.0) or np.any(weights > 1.0):
                raise ValueError("proportional allocations must lie in [0, 1]")
            total = float(weights.sum())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"proportional allocations must sum to 1, got {total!r}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def treated(self) -> np.ndarray:
        """Indices holding a full unit of allocation."""
        return np.flatnonzero(self.weights == 1.0)


@dataclass(frozen=True, eq=False)
class PopulationModel:
    """Curves, noise, and budget shared by every step of a simulation."""

    return_curves: tuple[ResponseCurve, ...]
    decay_curves: tuple[ResponseCurve, ...]
    noise: NoiseSpec
    budget: int

    def __post_init__(self) -> None:
        returns = tuple(self.return_curves)
        decays = tuple(self.decay_curves)
        if not returns or not decays:
            raise ValueError("need at least one return and one decay curve")
        if len(returns) != len(decays):
            raise ValueError(
                f"return and decay curve counts differ: {len(returns)} vs {len(decays)}"
            )
        for curve in (*returns, *decays):
            if not isinstance(curve, ResponseCurve):
                raise ValueError(f"curves must be ResponseCurve instances, got {curve!r}")
        if not isinstance(self.noise, NoiseSpec):
            raise ValueError(f"noise must be a NoiseSpec, got {self.noise!r}")
        if isinstance(self.budget, bool) or not isinstance(self.budget, (int, np.integer)):
            raise ValueError(f"budget must be an integer, got {self.budget!r}")
        if not 1 <= self.budget <= len(returns):
            raise ValueError(
                f"budget must lie in [1, {len(returns)}], got {self.budget!r}"
            )
        object.__setattr__(self, "return_curves", returns)
        object.__setattr__(self, "decay_curves", decays)
        object.__setattr__(self, "budget", int(self.budget))

    @property
    def n(self) -> int:
        return len(self.return_curves)

    def return_table(self) -> CurveTable:
        return CurveTable.from_curves(self.return_curves)

    def decay_table(self) -> CurveTable:
        return CurveTable.from_curves(self.decay_curves)


def step_population(
    state: PopulationState,
    allocation: AllocationVector,
    model: PopulationModel,
    rng: np.random.Generator,
) -> PopulationState:
    """Advance the population one step under the given allocation."""
    if state.n != model.n:
        raise ValueError(f"state has {state.n} individuals, model has {model.n}")
    if allocation.n != model.n:
        raise ValueError(f"allocation has {allocation.n} entries, model has {model.n}")
    if allocation.mode == "integer" and allocation.treated.size != model.budget:
        raise ValueError(
            f"integer allocation treats {allocation.treated.size} individuals, "
            f"budget is {model.budget}"
        )
    returns = model.return_table().evaluate(state.welfare)
    decays = model.decay_table().evaluate(state.welfare)
    shock = sample_noise(model.noise, rng, model.n)
    weights = allocation.weights
    welfare = state.welfare + weights * returns - (1.0 - weights) * decays + shock
    return PopulationState(state.step + 1, welfare)


def treatment_effect(model: PopulationModel, index: int, welfare: float) -> float:
    """Return ``f_i(u) + g_i(u)``, the swing from treating individual ``index``."""
    if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
        raise IndexError(f"index must be an integer, got {index!r}")
    if not 0 <= index < model.n:
        raise IndexError(f"index {index!r} out of range for population of {model.n}")
    return float(
        eval_curve(model.return_curves[index], welfare)
        + eval_curve(model.decay_curves[index], welfare)
    )
