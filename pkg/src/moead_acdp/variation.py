"""Differential-evolution crossover and bounded polynomial mutation.

Every operator draws a fixed number of variates per call regardless of its
parameters, so a run's random sequence does not depend on e.g. ``CR``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["VariationConfig", "de_rand1", "polynomial_mutation", "repair_bounds"]


@dataclass(frozen=True)
class VariationConfig:
    """DE scale/crossover rate and mutation settings; ``pm=None`` means ``1/n``."""

    F: float = 0.5
    CR: float = 1.0
    pm: float | None = None
    eta: float = 20.0

    def __post_init__(self):
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError("CR must lie in [0, 1]")
        if self.pm is not None and not 0.0 <= self.pm <= 1.0:
            raise ValueError("pm must lie in [0, 1]")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")

    def mutation_rate(self, n: int) -> float:
        return 1.0 / n if self.pm is None else self.pm


def de_rand1(base, d1, d2, F: float, CR: float, rng: np.random.Generator, current=None) -> np.ndarray:
    """Binomial DE/rand/1 trial vector.

    Dimension ``d`` takes the mutant ``base + F * (d1 - d2)`` with probability
    ``CR`` (and always at one random index), otherwise ``current`` (defaults
    to ``base``).
    """
    base = np.asarray(base, dtype=float)
    mutant = base + F * (np.asarray(d1, dtype=float) - np.asarray(d2, dtype=float))
    n = base.size
    mask = rng.random(n) < CR
    mask[rng.integers(n)] = True
    if current is None or mask.all():
        return mutant
    return np.where(mask, mutant, current)


def polynomial_mutation(x, pm: float, eta: float, lower, upper, rng: np.random.Generator) -> np.ndarray:
    """Polynomial mutation scaled by the distance to the bound being approached.

    With the perturbation draw ``u``, ``delta = (2u)**(1/(eta+1)) - 1`` for
    ``u < 0.5`` (moves toward ``lower`` by ``delta * (x - lower)``) and
    ``delta = 1 - (2(1-u))**(1/(eta+1))`` otherwise (toward ``upper``).  Any
    ``x`` inside the box stays inside it.
    """
    x = np.array(x, dtype=float)
    n = x.size
    hit = (rng.random(n) < pm).nonzero()[0]
    u = rng.random(n)
    e = 1.0 / (eta + 1.0)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    for i in hit.tolist():
        ui, xi = float(u[i]), float(x[i])
        if ui < 0.5:
            lo = float(lower[i] if lower.ndim else lower)
            x[i] = xi + ((2.0 * ui) ** e - 1.0) * (xi - lo)
        else:
            hi = float(upper[i] if upper.ndim else upper)
            x[i] = xi + (1.0 - (2.0 * (1.0 - ui)) ** e) * (hi - xi)
    return x


def repair_bounds(x, lower, upper) -> np.ndarray:
    """Clip each component to its nearest bound."""
    x = np.array(x, dtype=float)
    np.maximum(x, lower, out=x)
    np.minimum(x, upper, out=x)
    return x
