"""IGD and hypervolume indicators plus nondominated filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricReport",
    "nondominated_mask",
    "nondominated_filter",
    "igd",
    "hv",
    "reference_point",
    "problem_reference_point",
    "evaluate_metrics",
]


def nondominated_mask(F) -> np.ndarray:
    """Boolean mask of the rows of ``F`` not dominated by any other row.

    Of several identical rows only the first is kept.
    """
    F = np.asarray(F, dtype=float)
    k = len(F)
    mask = np.zeros(k, dtype=bool)
    if k == 0:
        return mask
    _, first = np.unique(F, axis=0, return_index=True)
    first = np.sort(first)
    P = F[first]
    if P.shape[1] == 2:
        order = np.lexsort((P[:, 1], P[:, 0]))
        f2 = P[order, 1]
        best_before = np.concatenate([[np.inf], np.minimum.accumulate(f2)[:-1]])
        keep_sorted = f2 < best_before
        keep = np.zeros(len(P), dtype=bool)
        keep[order] = keep_sorted
    else:
        keep = np.ones(len(P), dtype=bool)
        for i in range(len(P)):
            if not keep[i]:
                continue
            p = P[i]
            dominated = np.all(p <= P, axis=1) & np.any(p < P, axis=1)
            keep &= ~dominated
    mask[first[keep]] = True
    return mask


def nondominated_filter(points) -> np.ndarray:
    """Distinct nondominated points, in lexicographic order."""
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return P.reshape(0, P.shape[1] if P.ndim == 2 else 0)
    P = P[nondominated_mask(P)]
    return P[np.lexsort(P.T[::-1])]


def igd(reference, attained, chunk: int = 2048) -> float:
    """Mean Euclidean distance from each reference point to its nearest attained point.

    An empty attained set gives ``inf``.
    """
    R = np.asarray(reference, dtype=float)
    A = np.asarray(attained, dtype=float)
    if R.ndim != 2 or len(R) == 0:
        raise ValueError("reference front must be a non-empty (k, m) array")
    if A.size == 0:
        return math.inf
    A = A.reshape(-1, A.shape[-1])
    if A.shape[1] != R.shape[1]:
        raise ValueError(f"dimension mismatch: reference m={R.shape[1]}, attained m={A.shape[1]}")
    nearest = []
    for start in range(0, len(R), chunk):
        diff = R[start:start + chunk, None, :] - A[None, :, :]
        nearest.append(np.sqrt(np.sum(diff * diff, axis=-1)).min(axis=1))
    d = np.concatenate(nearest)
    return math.fsum(d.tolist()) / len(d)


def _hv2(P: np.ndarray, ref) -> float:
    """Exact 2-D hypervolume of points that already strictly dominate ``ref``."""
    if len(P) == 0:
        return 0.0
    P = P[nondominated_mask(P)]
    P = P[np.argsort(P[:, 0], kind="stable")]
    right = np.append(P[1:, 0], ref[0])
    return float(np.sum((right - P[:, 0]) * (ref[1] - P[:, 1])))


def hv(attained, ref_point) -> float:
    """Hypervolume of the region dominated by ``attained`` and bounded by ``ref_point``.

    Exact for two objectives (staircase sweep) and three (slicing along the
    third objective).  Points that do not strictly dominate the reference
    point contribute nothing.
    """
    ref = np.asarray(ref_point, dtype=float)
    m = ref.size
    if m > 3:
        raise NotImplementedError(f"hypervolume supports at most 3 objectives, got {m}")
    P = np.asarray(attained, dtype=float).reshape(-1, m)
    P = P[np.all(P < ref, axis=1)]
    if len(P) == 0:
        return 0.0
    if m == 2:
        return _hv2(P, ref)
    if m == 1:
        return float(ref[0] - P[:, 0].min())
    P = P[nondominated_mask(P)]
    P = P[np.argsort(P[:, 2], kind="stable")]
    levels = np.append(P[1:, 2], ref[2])
    total = 0.0
    for i in range(len(P)):
        height = levels[i] - P[i, 2]
        if height > 0:
            total += _hv2(P[: i + 1, :2], ref[:2]) * height
    return total


def reference_point(front) -> np.ndarray:
    """HV reference point at 1.4 times the nadir of a reference front."""
    F = np.asarray(getattr(front, "points", front), dtype=float)
    if F.size == 0:
        raise ValueError("reference front is empty")
    return 1.4 * F.max(axis=0)


def problem_reference_point(problem) -> np.ndarray:
    if problem.reference_point is not None:
        return np.asarray(problem.reference_point, dtype=float)
    return reference_point(problem.reference_front())


@dataclass(frozen=True)
class MetricReport:
    igd: float
    hv: float
    archive_size: int
    reference_point: tuple[float, ...]
    reference_front: str

    def as_dict(self) -> dict:
        return {
            "igd": self.igd,
            "hv": self.hv,
            "archive_size": self.archive_size,
            "reference_point": list(self.reference_point),
            "reference_front": self.reference_front,
        }


def evaluate_metrics(problem, attained) -> MetricReport:
    """IGD against the problem's reference front and HV at its reference point.

    Problems without a reference front (``front_candidates is None`` and a
    fixed ``reference_point``) report ``nan`` IGD.
    """
    A = np.asarray(attained, dtype=float).reshape(-1, problem.m)
    if problem.front_candidates is None and problem.reference_point is not None:
        value, ident = math.nan, "none"
    else:
        front = problem.reference_front()
        value, ident = igd(front.points, A), f"{problem.name}:{front.source}:{len(front)}"
    ref = problem_reference_point(problem)
    return MetricReport(
        igd=value,
        hv=hv(A, ref),
        archive_size=len(A),
        reference_point=tuple(float(v) for v in ref),
        reference_front=ident,
    )
