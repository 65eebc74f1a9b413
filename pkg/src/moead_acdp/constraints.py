"""Constraint-handling comparators for the MOEA/D subproblem update.

Each comparator answers one question: should child ``y`` replace the
incumbent ``x`` of a subproblem with weight vector ``lam``?  Two surfaces are
provided:

* scalar rule functions (:func:`acdp_replace`, :func:`cdp_replace`, ...) that
  take two solutions and return a bool, and
* :class:`Comparator` objects used by the engine, which hold per-run state
  (schedules) and decide a whole batch of incumbents against one child.

The batch path and the scalar rules are kept extensionally equal; the test
suite checks this over random inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .decomposition import tchebycheff

__all__ = [
    "ThetaSchedule",
    "EpsilonSchedule",
    "AdaptiveEpsilonState",
    "ComparatorContext",
    "angle_between",
    "theta_of",
    "epsilon_of",
    "initial_epsilon",
    "adaptive_epsilon_update",
    "feasible_ratio",
    "acdp_replace",
    "cdp_replace",
    "epsilon_replace",
    "sr_replace",
    "Comparator",
    "ACDP",
    "CDP",
    "CMOEAD",
    "EpsilonLevel",
    "StochasticRanking",
    "COMPARATORS",
    "make_comparator",
]

HALF_PI = math.pi / 2
_NORM_EPS = 1e-12


# ---------------------------------------------------------------- primitives


def angle_between(f1, f2, z) -> float | np.ndarray:
    """Angle at ``z`` between ``f1 - z`` and ``f2 - z``, in radians.

    ``f1`` may be a ``(k, m)`` stack, giving ``k`` angles.  If either
    difference vector is (numerically) zero the angle is defined as 0.
    """
    f1 = np.asarray(f1, dtype=float)
    d1 = f1 - z
    d2 = np.asarray(f2, dtype=float) - z
    n1 = np.sqrt(np.sum(d1 * d1, axis=-1))
    n2 = np.sqrt(np.sum(d2 * d2, axis=-1))
    dot = np.sum(d1 * d2, axis=-1)
    degenerate = (n1 < _NORM_EPS) | (n2 < _NORM_EPS)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.clip(dot / (n1 * n2), -1.0, 1.0)
    ang = np.where(degenerate, 0.0, np.arccos(np.where(degenerate, 1.0, cos)))
    return float(ang) if f1.ndim == 1 else ang


def feasible_ratio(cv) -> float:
    """Fraction of population slots whose violation is exactly zero."""
    cv = np.asarray(cv, dtype=float)
    if cv.size == 0:
        raise ValueError("population is empty")
    return np.count_nonzero(cv == 0.0) / cv.size


@dataclass(frozen=True)
class ThetaSchedule:
    """Angle threshold rising from ``theta0`` to pi/2 over ``alpha * t_max`` generations."""

    theta0: float
    alpha: float
    cp: float
    t_max: int

    def __post_init__(self):
        if self.theta0 <= 0:
            raise ValueError("theta0 must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")

    @classmethod
    def for_population(cls, N: int, t_max: int, alpha: float = 0.8, theta0: float | None = None) -> "ThetaSchedule":
        # cp makes theta0 * (1 + alpha)**cp == theta0 * N, i.e. pi/2 at the default theta0
        if N < 2:
            raise ValueError("population size must be >= 2")
        theta0 = HALF_PI / N if theta0 is None else theta0
        return cls(theta0=theta0, alpha=alpha, cp=math.log(N) / math.log(1 + alpha), t_max=t_max)

    @property
    def t_c(self) -> float:
        return self.alpha * self.t_max


def theta_of(k: int, schedule: ThetaSchedule) -> float:
    if not 1 <= k <= schedule.t_max:
        raise ValueError(f"generation {k} outside [1, {schedule.t_max}]")
    if k > schedule.t_c:
        return HALF_PI
    return min(schedule.theta0 * (1.0 + k / schedule.t_max) ** schedule.cp, HALF_PI)


@dataclass(frozen=True)
class EpsilonSchedule:
    eps0: float
    cp: float
    t_c: float

    def __post_init__(self):
        if self.eps0 < 0 or self.t_c <= 0:
            raise ValueError("eps0 must be >= 0 and t_c > 0")


def epsilon_of(k: float, schedule: EpsilonSchedule) -> float:
    if k >= schedule.t_c:
        return 0.0
    return schedule.eps0 * (1.0 - k / schedule.t_c) ** schedule.cp


def initial_epsilon(cv, fraction: float = 0.05) -> float:
    """Violation of the ``floor(fraction * N)``-th most violating individual."""
    cv = np.sort(np.asarray(cv, dtype=float))[::-1]
    idx = max(int(math.floor(fraction * cv.size)), 1)
    return float(cv[idx - 1])


@dataclass(frozen=True)
class AdaptiveEpsilonState:
    level: float = 0.0


def adaptive_epsilon_update(cv, state: AdaptiveEpsilonState | None = None) -> AdaptiveEpsilonState:
    """Level = feasible ratio times mean population violation."""
    cv = np.asarray(cv, dtype=float)
    if cv.size == 0:
        raise ValueError("population is empty")
    pf = feasible_ratio(cv)
    if pf == 1.0:
        return AdaptiveEpsilonState(0.0)
    return AdaptiveEpsilonState(pf * float(np.mean(cv)))


@dataclass(frozen=True)
class ComparatorContext:
    """Per-generation inputs shared by every comparison in that generation."""

    generation: int = 0
    theta: float = HALF_PI
    p_f: float = 0.0
    epsilon: float = 0.0
    sr_threshold: float = 0.0
    ideal: Any = None


# -------------------------------------------------------------- scalar rules


def _fv(ind):
    """(objectives, violation) of an Individual-like object or a ``(f, cv)`` pair."""
    if isinstance(ind, tuple) and len(ind) == 2 and np.ndim(ind[1]) == 0:
        return np.asarray(ind[0], dtype=float), float(ind[1])
    return np.asarray(ind.f, dtype=float), float(ind.violation)


def acdp_replace(x, y, lam, ctx: ComparatorContext, r: float) -> bool:
    """Angle-based constrained dominance: does ``y`` replace ``x``?

    Both feasible: aggregation decides.  Otherwise, if the angle between them
    is within ``ctx.theta`` the smaller violation wins; if wider, ``y`` wins on
    aggregation with probability ``ctx.p_f`` (``r`` is the uniform draw).
    """
    fx, cvx = _fv(x)
    fy, cvy = _fv(y)
    z = ctx.ideal
    better = tchebycheff(fy, lam, z) <= tchebycheff(fx, lam, z)
    if cvx == 0.0 and cvy == 0.0:
        return bool(better)
    if angle_between(fy, fx, z) <= ctx.theta:
        return cvy < cvx
    return bool(r < ctx.p_f and better)


def cdp_replace(x, y, lam, z) -> bool:
    fx, cvx = _fv(x)
    fy, cvy = _fv(y)
    if cvx == 0.0 and cvy == 0.0:
        return bool(tchebycheff(fy, lam, z) <= tchebycheff(fx, lam, z))
    return cvy < cvx


def epsilon_replace(x, y, lam, z, eps: float) -> bool:
    if eps < 0:
        raise ValueError("epsilon level must be non-negative")
    fx, cvx = _fv(x)
    fy, cvy = _fv(y)
    if (cvx <= eps and cvy <= eps) or cvx == cvy:
        return bool(tchebycheff(fy, lam, z) <= tchebycheff(fx, lam, z))
    return cvy < cvx


def sr_replace(x, y, lam, z, r_f: float, r: float) -> bool:
    if not 0.0 <= r_f <= 1.0:
        raise ValueError("r_f must lie in [0, 1]")
    if r < r_f:
        fx, _ = _fv(x)
        fy, _ = _fv(y)
        return bool(tchebycheff(fy, lam, z) <= tchebycheff(fx, lam, z))
    return cdp_replace(x, y, lam, z)


# -------------------------------------------------------- engine comparators


class Comparator:
    """Base class: per-run schedule plus a batched replacement decision.

    The engine calls :meth:`setup` once with the initial population's
    violations, :meth:`context` at the start of every generation, and
    :meth:`decide` for every child.
    """

    name = "base"

    def __init__(self, **params):
        if params:
            raise TypeError(f"{self.name}: unexpected parameters {sorted(params)}")
        self.N = 0
        self.t_max = 0

    def params(self) -> dict:
        return {}

    def setup(self, N: int, t_max: int, cv0: np.ndarray) -> None:
        self.N = N
        self.t_max = t_max

    def context(self, k: int, cv: np.ndarray) -> ComparatorContext:
        return ComparatorContext(generation=k, p_f=feasible_ratio(cv))

    def decide(self, Fx, cvx, fy, cvy, gx, gy, z, ctx: ComparatorContext, r) -> np.ndarray:
        """Replacement mask for incumbents ``(Fx, cvx)`` against child ``(fy, cvy)``.

        ``gx`` and ``gy`` are the aggregation values of the incumbents and of
        the child on each incumbent's subproblem; ``r`` holds one uniform
        draw per incumbent.
        """
        raise NotImplementedError

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class CDP(Comparator):
    name = "cdp"

    def decide(self, Fx, cvx, fy, cvy, gx, gy, z, ctx, r):
        both = (cvx == 0.0) & (cvy == 0.0)
        return np.where(both, gy <= gx, cvy < cvx)


class ACDP(Comparator):
    name = "acdp"

    def __init__(self, alpha: float = 0.8, theta0: float | None = None, pinned_theta: float | None = None):
        super().__init__()
        self.alpha = alpha
        self.theta0 = theta0
        self.pinned_theta = pinned_theta
        self.schedule: ThetaSchedule | None = None

    def params(self):
        return {"alpha": self.alpha, "theta0": self.theta0, "pinned_theta": self.pinned_theta}

    def setup(self, N, t_max, cv0):
        super().setup(N, t_max, cv0)
        self.schedule = ThetaSchedule.for_population(N, max(t_max, 1), self.alpha, self.theta0)

    def context(self, k, cv):
        theta = self.pinned_theta if self.pinned_theta is not None else theta_of(k, self.schedule)
        return ComparatorContext(generation=k, theta=theta, p_f=feasible_ratio(cv))

    def decide(self, Fx, cvx, fy, cvy, gx, gy, z, ctx, r):
        better = gy <= gx
        both = (cvx == 0.0) & (cvy == 0.0)
        if cvy == 0.0 and both.all():
            return better
        close = angle_between(Fx, fy, z) <= ctx.theta
        return np.where(both, better, np.where(close, cvy < cvx, (r < ctx.p_f) & better))


def _epsilon_decide(cvx, cvy, gx, gy, eps):
    within = ((cvx <= eps) & (cvy <= eps)) | (cvx == cvy)
    return np.where(within, gy <= gx, cvy < cvx)


class EpsilonLevel(Comparator):
    """Epsilon-level comparison with a level that shrinks to zero at ``t_c``.

    ``t_c`` defaults to ``t_c_ratio * t_max`` (400 of 500 generations at the
    reference settings).
    """

    name = "epsilon"

    def __init__(self, cp: float = 2.0, fraction: float = 0.05, t_c: float | None = None, t_c_ratio: float = 0.8):
        super().__init__()
        self.cp = cp
        self.fraction = fraction
        self.t_c = t_c
        self.t_c_ratio = t_c_ratio
        self.schedule: EpsilonSchedule | None = None

    def params(self):
        return {"cp": self.cp, "fraction": self.fraction, "t_c": self.t_c, "t_c_ratio": self.t_c_ratio}

    def setup(self, N, t_max, cv0):
        super().setup(N, t_max, cv0)
        t_c = self.t_c if self.t_c is not None else self.t_c_ratio * max(t_max, 1)
        self.schedule = EpsilonSchedule(eps0=initial_epsilon(cv0, self.fraction), cp=self.cp, t_c=t_c)

    def context(self, k, cv):
        return ComparatorContext(generation=k, epsilon=epsilon_of(k, self.schedule), p_f=feasible_ratio(cv))

    def decide(self, Fx, cvx, fy, cvy, gx, gy, z, ctx, r):
        return _epsilon_decide(cvx, cvy, gx, gy, ctx.epsilon)


class CMOEAD(Comparator):
    """Epsilon comparison with a level adapted from the current population."""

    name = "cmoead"

    def context(self, k, cv):
        level = adaptive_epsilon_update(cv).level
        return ComparatorContext(generation=k, epsilon=level, p_f=feasible_ratio(cv))

    def decide(self, Fx, cvx, fy, cvy, gx, gy, z, ctx, r):
        return _epsilon_decide(cvx, cvy, gx, gy, ctx.epsilon)


class StochasticRanking(Comparator):
    name = "sr"

    def __init__(self, sr: float = 0.01):
        super().__init__()
        if not 0.0 <= sr <= 1.0:
            raise ValueError("sr threshold must lie in [0, 1]")
        self.sr = sr

    def params(self):
        return {"sr": self.sr}

    def context(self, k, cv):
        return ComparatorContext(generation=k, sr_threshold=self.sr, p_f=feasible_ratio(cv))

    def decide(self, Fx, cvx, fy, cvy, gx, gy, z, ctx, r):
        better = gy <= gx
        both = (cvx == 0.0) & (cvy == 0.0)
        cdp = np.where(both, better, cvy < cvx)
        return np.where(r < ctx.sr_threshold, better, cdp)


COMPARATORS: dict[str, type[Comparator]] = {
    cls.name: cls for cls in (ACDP, CDP, CMOEAD, EpsilonLevel, StochasticRanking)
}


def make_comparator(name: str, **params) -> Comparator:
    try:
        cls = COMPARATORS[name]
    except KeyError:
        raise KeyError(f"unknown comparator {name!r}; available: {', '.join(COMPARATORS)}") from None
    return cls(**params)


def with_ideal(ctx: ComparatorContext, z) -> ComparatorContext:
    return replace(ctx, ideal=np.asarray(z, dtype=float))
