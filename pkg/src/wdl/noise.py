"""Additive welfare shocks.

Two noise families are supported: a capped Gaussian (a normal draw clamped
to ``[-cap, +cap]``) and a finite integer lattice with explicit probability
masses.  Lattice specs must keep at least ``tail_mass`` probability at or
beyond ``+z_star`` and beyond ``-z_star``; that two-sided mass requirement is
what the ruin analysis leans on, and it is validated only for the lattice
family.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

NOISE_KINDS = ("capped-gaussian", "integer-lattice")


@dataclass(frozen=True)
class NoiseSpec:
    """Distribution of the per-step additive shock."""

    kind: str = "capped-gaussian"
    sigma: float = 0.5
    cap: float = 5.0
    lattice_mass: tuple[tuple[int, float], ...] | None = None
    z_star: float = 1.0
    tail_mass: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not (isinstance(self.sigma, (int, float)) and math.isfinite(self.sigma)) or self.sigma < 0:
            raise ValueError(f"sigma must be a finite non-negative number, got {self.sigma!r}")
        if not (isinstance(self.cap, (int, float)) and math.isfinite(self.cap)) or self.cap <= 0:
            raise ValueError(f"cap must be a finite positive number, got {self.cap!r}")
        if not (isinstance(self.z_star, (int, float)) and math.isfinite(self.z_star)) or self.z_star <= 0:
            raise ValueError(f"z_star must be a finite positive number, got {self.z_star!r}")
        if not 0.0 < self.tail_mass <= 0.5:
            raise ValueError(f"tail_mass must lie in (0, 0.5], got {self.tail_mass!r}")
        if self.lattice_mass is not None:
            object.__setattr__(self, "lattice_mass", _normalise_mass(self.lattice_mass))
        if self.kind == "integer-lattice":
            if not self.lattice_mass:
                raise ValueError("integer-lattice noise requires lattice_mass")
            total = sum(p for _, p in self.lattice_mass)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"lattice probabilities must sum to 1, got {total!r}")
            upper = sum(p for k, p in self.lattice_mass if k >= self.z_star)
            lower = sum(p for k, p in self.lattice_mass if k <= -self.z_star)
            if upper < self.tail_mass - 1e-12 or lower < self.tail_mass - 1e-12:
                raise ValueError(
                    f"lattice mass must place at least {self.tail_mass} at or beyond "
                    f"+{self.z_star} and -{self.z_star}; got {upper:g} above, {lower:g} below"
                )

    def support(self) -> np.ndarray:
        """Lattice increment values in ascending order."""
        if self.lattice_mass is None:
            raise ValueError("support is defined only for integer-lattice noise")
        return np.array([k for k, _ in self.lattice_mass], dtype=float)

    def probabilities(self) -> np.ndarray:
        """Lattice probabilities aligned with :meth:`support`."""
        if self.lattice_mass is None:
            raise ValueError("probabilities are defined only for integer-lattice noise")
        return np.array([p for _, p in self.lattice_mass], dtype=float)


def _normalise_mass(mass) -> tuple[tuple[int, float], ...]:
    if isinstance(mass, Mapping):
        items = mass.items()
    elif isinstance(mass, Iterable):
        items = list(mass)
    else:
        raise ValueError(f"lattice_mass must be a mapping or pair iterable, got {mass!r}")
    out = []
    seen = set()
    for key, prob in items:
        if isinstance(key, bool) or not isinstance(key, (int, np.integer)):
            raise ValueError(f"lattice increments must be integers, got {key!r}")
        if not (isinstance(prob, (int, float)) and math.isfinite(prob)) or prob < 0:
            raise ValueError(f"lattice probabilities must be finite and non-negative, got {prob!r}")
        if key in seen:
            raise ValueError(f"duplicate lattice increment {key!r}")
        seen.add(key)
        out.append((int(key), float(prob)))
    if not out:
        raise ValueError("lattice_mass must not be empty")
    return tuple(sorted(out))


def sample_noise(spec: NoiseSpec, rng: np.random.Generator, size) -> np.ndarray:
    """Draw shocks of the given ``size`` from ``spec`` using ``rng``."""
    if spec.kind == "capped-gaussian":
        draws = rng.normal(0.0, spec.sigma, size)
        return np.clip(draws, -spec.cap, spec.cap)
    values = spec.support()
    cumulative = np.cumsum(spec.probabilities())
    cumulative[-1] = 1.0  # guard rounding so every uniform draw maps to a value
    uniforms = rng.random(size)
    return values[np.searchsorted(cumulative, uniforms, side="right")]
