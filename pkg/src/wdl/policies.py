"""Allocation policies.

Scored integer policies rank individuals and treat the top ``budget``
scorers; ties are broken deterministically (lowest index by default,
lowest welfare then lowest index for ``max-g``, which makes ``max-g``
coincide with ``min-u`` whenever all decay curves are identical and
decreasing).  The ``random`` policy treats a uniformly random subset of the
budget's size.  Proportional policies spread one unit of allocation over the
population with a softmax of welfare (``prop-max-u``) or its negation
(``prop-min-u``).

The ``_batch_*`` helpers operate on ``(..., n)`` arrays so the simulation
engine can run many replications in one call; the public functions wrap them
for a single population state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AllocationVector, PopulationModel, PopulationState

POLICY_KINDS = (
    "min-u",
    "max-u",
    "max-f",
    "max-g",
    "max-fg",
    "random",
    "prop-max-u",
    "prop-min-u",
)
SCORED_KINDS = ("min-u", "max-u", "max-f", "max-g", "max-fg")
PROPORTIONAL_KINDS = ("prop-max-u", "prop-min-u")
TIE_BREAKS = ("lowest-index", "lowest-welfare")


@dataclass(frozen=True)
class PolicySpec:
    """A policy kind plus its tie-breaking rule (scored kinds only)."""

    kind: str
    tie_break: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.tie_break is not None:
            if self.tie_break not in TIE_BREAKS:
                raise ValueError(
                    f"unknown tie break {self.tie_break!r}; expected one of {TIE_BREAKS}"
                )
            if self.kind not in SCORED_KINDS:
                raise ValueError(f"policy {self.kind!r} does not take a tie break")

    @property
    def resolved_tie_break(self) -> str:
        """Tie break in force: explicit value, else the kind's default."""
        if self.tie_break is not None:
            return self.tie_break
        return "lowest-welfare" if self.kind == "max-g" else "lowest-index"

    @property
    def label(self) -> str:
        return self.kind


def _batch_scores(kind: str, welfare, returns, decays):
    """Selection scores for one of the scored kinds; higher is treated first."""
    if kind == "min-u":
        return -welfare
    if kind == "max-u":
        return welfare
    if kind == "max-f":
        return returns
    if kind == "max-g":
        return decays
    if kind == "max-fg":
        return returns + decays
    raise ValueError(f"policy {kind!r} does not score individuals")


def _batch_topm(scores, welfare, budget: int, tie_break: str) -> np.ndarray:
    """0/1 allocation treating the ``budget`` highest scores per row.

    Sorting is stable, so after the explicit keys any remaining ties fall
    back to the lowest index.
    """
    scores = np.asarray(scores, dtype=float)
    if tie_break == "lowest-index":
        order = np.argsort(-scores, axis=-1, kind="stable")
    else:
        order = np.lexsort((np.asarray(welfare, dtype=float), -scores), axis=-1)
    allocation = np.zeros_like(scores)
    np.put_along_axis(allocation, order[..., :budget], 1.0, axis=-1)
    return allocation


def _batch_softmax(kind: str, welfare) -> np.ndarray:
    """Proportional weights; shifted by the row maximum for stability."""
    z = np.asarray(welfare, dtype=float)
    if kind == "prop-min-u":
        z = -z
    elif kind != "prop-max-u":
        raise ValueError(f"policy {kind!r} is not proportional")
    z = z - z.max(axis=-1, keepdims=True)
    weights = np.exp(z)
    return weights / weights.sum(axis=-1, keepdims=True)


def score_individuals(
    policy: PolicySpec, state: PopulationState, model: PopulationModel
) -> np.ndarray:
    """Selection scores under ``policy`` for the current state."""
    if policy.kind not in SCORED_KINDS:
        raise ValueError(f"policy {policy.kind!r} does not score individuals")
    if state.n != model.n:
        raise ValueError(f"state has {state.n} individuals, model has {model.n}")
    returns = model.return_table().evaluate(state.welfare)
    decays = model.decay_table().evaluate(state.welfare)
    return _batch_scores(policy.kind, state.welfare, returns, decays)


def select_integer_allocation(
    policy: PolicySpec,
    state: PopulationState,
    model: PopulationModel,
    rng: np.random.Generator | None = None,
) -> AllocationVector:
    """Choose the treated subset for one step of an integer policy."""
    if policy.kind in PROPORTIONAL_KINDS:
        raise ValueError("use select_proportional_allocation for proportional policies")
    if state.n != model.n:
        raise ValueError(f"state has {state.n} individuals, model has {model.n}")
    if policy.kind == "random":
        if rng is None:
            raise ValueError("the random policy requires an rng")
        # top-M of i.i.d. uniform keys is a uniformly random M-subset
        keys = rng.random(state.n)
        allocation = _batch_topm(keys, state.welfare, model.budget, "lowest-index")
    else:
        scores = score_individuals(policy, state, model)
        allocation = _batch_topm(
            scores, state.welfare, model.budget, policy.resolved_tie_break
        )
    return AllocationVector(allocation, "integer")


def select_proportional_allocation(
    policy: PolicySpec, state: PopulationState
) -> AllocationVector:
    """Softmax allocation weights for one step of a proportional policy."""
    if policy.kind not in PROPORTIONAL_KINDS:
        raise ValueError(f"policy {policy.kind!r} is not proportional")
    return AllocationVector(_batch_softmax(policy.kind, state.welfare), "proportional")
