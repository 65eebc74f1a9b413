"""Summary statistics and the two-sided Wilcoxon rank-sum test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "SampleSummary",
    "summarize",
    "wilcoxon_rank_sum",
    "significance_mark",
    "compare_samples",
    "EXACT_LIMIT",
    "ALPHA",
]

EXACT_LIMIT = 20
ALPHA = 0.05


@dataclass(frozen=True)
class SampleSummary:
    mean: float
    std: float
    median: float
    count: int


def summarize(values: Sequence[float]) -> SampleSummary:
    """Mean, sample standard deviation (n - 1 divisor), median and count."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot summarize an empty sample")
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    if not math.isfinite(std):
        std = math.inf if np.any(np.isinf(v)) else std
    return SampleSummary(mean=float(np.mean(v)), std=std, median=float(np.median(v)), count=int(v.size))


def _exact_p(doubled_ranks: np.ndarray, n1: int, observed: int) -> float:
    """Two-sided p from the exact null distribution of the (doubled) rank sum.

    Counts, by dynamic programming over the pooled midranks, how many of the
    ``C(n, n1)`` equally likely rank subsets deviate from the null mean at
    least as much as the observed one.
    """
    n = doubled_ranks.size
    total = int(doubled_ranks.sum())
    top = total + 1
    # ways[k][s]: number of k-subsets with doubled rank sum s
    ways = np.zeros((n1 + 1, top), dtype=object)
    ways[0, 0] = 1
    for r in doubled_ranks.tolist():
        for k in range(min(n1, n) - 1, -1, -1):
            ways[k + 1, r:] = ways[k + 1, r:] + ways[k, : top - r]
    dist = ways[n1]
    # compare 2 * n * (sum) against n1 * total to stay in integers
    dev = np.abs(2 * n * np.arange(top) - 2 * n1 * total)
    obs_dev = abs(2 * n * observed - 2 * n1 * total)
    extreme = sum(int(c) for c, d in zip(dist.tolist(), dev.tolist()) if c and d >= obs_dev)
    return min(1.0, extreme / math.comb(n, n1))


def _normal_p(ranks: np.ndarray, n1: int, n2: int) -> float:
    n = n1 + n2
    u = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    ties = float(np.sum(counts.astype(float) ** 3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return 1.0
    zstat = max(abs(u - mu) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(zstat / math.sqrt(2.0)))


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float], method: str = "auto") -> float:
    """Two-sided p-value of the Wilcoxon rank-sum (Mann-Whitney) test.

    ``method="auto"`` enumerates the exact null distribution when the pooled
    size is at most ``EXACT_LIMIT`` and otherwise uses the normal
    approximation with tie and continuity corrections.  Ties get midranks;
    infinite values are allowed and rank last.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    if np.any(np.isnan(a)) or np.any(np.isnan(b)):
        raise ValueError("samples must not contain NaN")
    n1, n2 = a.size, b.size
    ranks = rankdata(np.concatenate([a, b]))
    if method == "auto":
        method = "exact" if n1 + n2 <= EXACT_LIMIT else "normal"
    if method == "exact":
        doubled = np.rint(2 * ranks).astype(np.int64)
        return _exact_p(doubled, n1, int(doubled[:n1].sum()))
    if method == "normal":
        return _normal_p(ranks, n1, n2)
    raise ValueError(f"unknown method {method!r}")


def significance_mark(p: float, direction: int) -> str:
    """Table mark for a baseline against the reference algorithm.

    ``direction`` is positive when the baseline is better, negative when it
    is worse and zero for a tie; the mark is ``"none"`` unless ``p < 0.05``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p >= ALPHA or direction == 0:
        return "none"
    return "better" if direction > 0 else "worse"


def compare_samples(baseline, reference, lower_is_better: bool = True) -> tuple[float, str]:
    """p-value and mark of ``baseline`` versus ``reference`` (medians decide direction)."""
    p = wilcoxon_rank_sum(baseline, reference)
    mb, mr = float(np.median(baseline)), float(np.median(reference))
    if mb == mr:
        direction = 0
    else:
        direction = 1 if (mb < mr) == lower_is_better else -1
    return p, significance_mark(p, direction)
