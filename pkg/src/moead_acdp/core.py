"""Domain types and the violation / dominance primitives.

Every objective is minimized.  Inequality constraints follow the ``g(x) >= 0``
convention and equality constraints ``h(x) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "EvaluationError",
    "Individual",
    "ConstraintReport",
    "RandomStream",
    "STREAM_NAMES",
    "overall_violation",
    "violation_batch",
    "pareto_dominates",
]


class EvaluationError(RuntimeError):
    """Raised when an objective or constraint evaluation yields a non-finite value."""

    def __init__(self, message: str, generation: int | None = None, subproblem: int | None = None):
        self.generation = generation
        self.subproblem = subproblem
        where = []
        if generation is not None:
            where.append(f"generation={generation}")
        if subproblem is not None:
            where.append(f"subproblem={subproblem}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


def overall_violation(g: Sequence[float] = (), h: Sequence[float] = (), eq_tol: float = 0.0) -> float:
    """Aggregate constraint values into one non-negative violation degree.

    ``sum(|min(g_i, 0)|) + sum(max(|h_j| - eq_tol, 0))``.  With ``eq_tol=0`` an
    equality constraint contributes ``|h_j|`` directly.
    """
    if eq_tol < 0:
        raise ValueError("eq_tol must be non-negative")
    g = np.asarray(g, dtype=float).ravel()
    h = np.asarray(h, dtype=float).ravel()
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise EvaluationError("non-finite constraint value")
    total = float(np.sum(-np.minimum(g, 0.0)))
    if h.size:
        total += float(np.sum(np.maximum(np.abs(h) - eq_tol, 0.0)))
    return total


def violation_batch(G: np.ndarray | None, H: np.ndarray | None, count: int, eq_tol: float = 0.0) -> np.ndarray:
    """Row-wise :func:`overall_violation` for ``(count, q)`` and ``(count, p)`` arrays."""
    cv = np.zeros(count)
    if G is not None and np.size(G):
        G = np.asarray(G, dtype=float).reshape(count, -1)
        cv += np.sum(-np.minimum(G, 0.0), axis=1)
    if H is not None and np.size(H):
        H = np.asarray(H, dtype=float).reshape(count, -1)
        cv += np.sum(np.maximum(np.abs(H) - eq_tol, 0.0), axis=1)
    if not np.all(np.isfinite(cv)):
        raise EvaluationError("non-finite constraint value")
    return cv


def pareto_dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


@dataclass(frozen=True)
class ConstraintReport:
    inequality: tuple[float, ...] = ()
    equality: tuple[float, ...] = ()
    violation: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0


@dataclass(frozen=True)
class Individual:
    """One evaluated solution: decision vector, objectives and constraint report."""

    x: tuple[float, ...]
    f: tuple[float, ...]
    constraints: ConstraintReport = field(default_factory=ConstraintReport)

    @property
    def violation(self) -> float:
        return self.constraints.violation

    @property
    def feasible(self) -> bool:
        return self.constraints.feasible


# Fixed order: the spawn key of each sub-stream is its index here, so adding a
# consumer inside one stream never shifts the draws of another.
STREAM_NAMES = ("init", "mating", "de", "mutation", "comparator")


class RandomStream:
    """Seeded parent of independent named sub-generators (PCG64).

    >>> rs = RandomStream(7)
    >>> a = rs.substream("de").random()
    >>> b = RandomStream(7).substream("de").random()
    >>> a == b
    True
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = seed

    def substream(self, name: str) -> np.random.Generator:
        try:
            key = STREAM_NAMES.index(name)
        except ValueError:
            raise KeyError(f"unknown stream {name!r}; expected one of {STREAM_NAMES}") from None
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(key,))))

    def substreams(self) -> dict[str, np.random.Generator]:
        return {name: self.substream(name) for name in STREAM_NAMES}
