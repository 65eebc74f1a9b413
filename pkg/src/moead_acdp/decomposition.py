"""Weight vectors, Tchebycheff aggregation, neighborhoods and the ideal point."""

from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from .core import EvaluationError

__all__ = [
    "WEIGHT_FLOOR",
    "generate_weights",
    "lattice_size",
    "tchebycheff",
    "build_neighborhoods",
    "update_ideal",
]

WEIGHT_FLOOR = 1e-6


def lattice_size(m: int, H: int) -> int:
    return comb(H + m - 1, m - 1)


def generate_weights(m: int, H: int) -> np.ndarray:
    """Simplex-lattice weight vectors ``a / H`` with integer ``a_i >= 0`` summing to ``H``.

    Rows come in lexicographic order of ``a``; the result has
    ``C(H + m - 1, m - 1)`` rows, each summing to one.

    >>> generate_weights(2, 2).tolist()
    [[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]
    """
    if m < 2:
        raise ValueError("need at least two objectives")
    if H < 1:
        raise ValueError("lattice divisions H must be >= 1")
    # stars and bars: choose m-1 bar positions among H+m-1 slots
    rows = []
    for bars in combinations(range(H + m - 1), m - 1):
        parts = np.diff((-1,) + bars + (H + m - 1,)) - 1
        rows.append(parts)
    a = np.array(rows, dtype=np.int64)
    a = a[np.lexsort(a.T[::-1])]
    return a / H


def tchebycheff(f, lam, z, floor: float = WEIGHT_FLOOR):
    """Weighted Tchebycheff value ``max_i |f_i - z_i| / max(lam_i, floor)``.

    Broadcasts over leading axes, so ``f`` and ``lam`` may be ``(k, m)`` stacks.
    """
    if floor <= 0:
        raise ValueError("floor must be positive")
    f = np.asarray(f, dtype=float)
    lam = np.asarray(lam, dtype=float)
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(f)):
        raise EvaluationError("non-finite objective in aggregation")
    val = np.max(np.abs(f - z) / np.maximum(lam, floor), axis=-1)
    return float(val) if val.ndim == 0 else val


def build_neighborhoods(weights: np.ndarray, T: int) -> np.ndarray:
    """Indices of the ``T`` nearest weight vectors for each vector (self first).

    Ties in distance resolve to the lower index.  Lattice weights (all
    components multiples of ``1/H``) are compared through exact integer
    squared distances, so mirror-image neighbors tie exactly instead of
    being split by rounding.
    """
    weights = np.asarray(weights, dtype=float)
    N = len(weights)
    if not 1 <= T <= N:
        raise ValueError(f"neighborhood size T={T} must lie in [1, {N}]")
    counts = _lattice_counts(weights)
    if counts is not None:
        diff = counts[:, None, :] - counts[None, :, :]
        dist = np.sum(diff * diff, axis=-1)
    else:
        diff = weights[:, None, :] - weights[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
    return np.argsort(dist, axis=1, kind="stable")[:, :T]


def _lattice_counts(weights: np.ndarray) -> np.ndarray | None:
    positive = weights[weights > 0]
    if positive.size == 0:
        return None
    H = round(1.0 / positive.min())
    if not 1 <= H <= 10**6:
        return None
    scaled = weights * H
    counts = np.rint(scaled)
    if not np.all(np.abs(scaled - counts) <= 1e-9 * H):
        return None
    return counts.astype(np.int64)


def update_ideal(z, f) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    f = np.asarray(f, dtype=float)
    if z.shape != f.shape[-1:]:
        raise ValueError("ideal point and objective vector differ in length")
    return np.minimum(z, f if f.ndim == 1 else f.min(axis=0))
