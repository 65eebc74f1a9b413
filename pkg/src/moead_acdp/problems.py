"""Problem abstraction, LIR-style benchmark generator and reference fronts.

The LIR-style family builds bi-objective problems from a *shape* function of
the position variable ``x1`` and a quadratic *distance* function of the
remaining variables::

    f1 = x1 + w * d(x),   f2 = shape(x1) + w * d(x),   d(x) = sum_{i>=2} (x_i - 0.5)**2

so every ``x1`` traces a ray along the (1, 1) diagonal that starts on the
unconstrained front ``f2 = shape(f1)``.  Obstacles are rotated ellipses in
objective space; the inside of an ellipse is infeasible.  Large ellipses laid
across the diagonal act as walls between the random initial population and
the front.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .core import ConstraintReport, EvaluationError, Individual, violation_batch
from .metrics import nondominated_mask

__all__ = [
    "ProblemDefinition",
    "Ellipse",
    "LirLikeSpec",
    "ReferenceFront",
    "ProblemNotFound",
    "IBEAM_REFERENCE_POINT",
    "make_lir_like",
    "make_shell_problem",
    "sample_reference_front",
    "thin_front",
    "builtin_problems",
    "get_problem",
    "register_problem",
    "list_problems",
]

# Published HV reference point for the I-beam design problem, whose model is
# not bundled here; attach it to a user-registered I-beam problem.
IBEAM_REFERENCE_POINT = (850.0, 0.0615)


class ProblemNotFound(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class ProblemDefinition:
    """A box-bounded CMOP.

    ``evaluator`` maps decision vectors to ``(F, G, H)``: objectives,
    inequality values (``g >= 0`` feasible) and equality values, either of the
    last two may be ``None``.  With ``vectorized=True`` it receives a
    ``(k, n)`` array and returns ``(k, .)`` arrays; otherwise it is called per
    point with a 1-D array.

    ``front_candidates(count)``, when given, returns decision vectors whose
    images cover the constrained front densely; the reference-front sampler
    filters and thins them.  ``reference_point`` fixes the HV reference point
    instead of deriving it from the front.
    """

    name: str
    n: int
    m: int
    lower: np.ndarray
    upper: np.ndarray
    evaluator: Callable
    vectorized: bool = False
    eq_tol: float = 0.0
    front_candidates: Callable[[int], tuple[np.ndarray, str]] | None = None
    reference_point: tuple[float, ...] | None = None
    description: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.size == 1:
            lower = np.full(self.n, lower[0])
        if upper.size == 1:
            upper = np.full(self.n, upper[0])
        if lower.shape != (self.n,) or upper.shape != (self.n,):
            raise ValueError("bounds do not match the decision dimension")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper)) and np.all(lower < upper)):
            raise ValueError("bounds must be finite with lower < upper")
        if self.m < 2:
            raise ValueError("need at least two objectives")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def evaluate_batch(self, X) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k = X.shape[0]
        if self.vectorized:
            F, G, H = self.evaluator(X)
        else:
            rows = [self.evaluator(x) for x in X]
            F = np.array([r[0] for r in rows], dtype=float)
            G = None if rows[0][1] is None else np.array([np.ravel(r[1]) for r in rows], dtype=float)
            H = None if rows[0][2] is None else np.array([np.ravel(r[2]) for r in rows], dtype=float)
        F = np.asarray(F, dtype=float).reshape(k, self.m)
        if not np.all(np.isfinite(F)):
            raise EvaluationError(f"{self.name}: non-finite objective value")
        return F, G, H

    def evaluate_cv(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Objectives and overall violation for a batch of decision vectors."""
        X = np.atleast_2d(X)
        F, G, H = self.evaluate_batch(X)
        return F, violation_batch(G, H, X.shape[0], self.eq_tol)

    def evaluate_one(self, x) -> tuple[np.ndarray, float]:
        """Objectives and violation of one decision vector (engine hot path).

        Uses the evaluator's ``single`` method when it has one; results match
        :meth:`evaluate_cv` bit for bit.
        """
        single = getattr(self.evaluator, "single", None)
        if single is None:
            F, cv = self.evaluate_cv(x[None, :])
            return F[0], float(cv[0])
        f, cv = single(x)
        if not (np.isfinite(f).all() and math.isfinite(cv)):
            raise EvaluationError(f"{self.name}: non-finite objective or constraint value")
        return f, cv

    def evaluate(self, x) -> tuple[np.ndarray, ConstraintReport]:
        x = np.asarray(x, dtype=float)
        F, G, H = self.evaluate_batch(x[None, :])
        g = () if G is None else tuple(float(v) for v in np.ravel(G[0]))
        h = () if H is None else tuple(float(v) for v in np.ravel(H[0]))
        cv = float(violation_batch(G, H, 1, self.eq_tol)[0])
        return F[0], ConstraintReport(inequality=g, equality=h, violation=cv)

    def individual(self, x) -> Individual:
        f, report = self.evaluate(x)
        return Individual(x=tuple(map(float, x)), f=tuple(map(float, f)), constraints=report)

    def reference_front(self, count: int | None = None) -> "ReferenceFront":
        """Cached :func:`sample_reference_front` (1000 points for m=2, 10000 otherwise)."""
        if count is None:
            count = 1000 if self.m == 2 else 10000
        if count not in self._cache:
            self._cache[count] = sample_reference_front(self, count)
        return self._cache[count]


@dataclass(frozen=True)
class ReferenceFront:
    points: np.ndarray
    decisions: np.ndarray | None
    source: str  # "analytic" or "sampled"

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------- LIR-style


@dataclass(frozen=True)
class Ellipse:
    """Infeasible ellipse centered at ``(p, q)`` in objective space.

    Semi-axis ``a`` points along ``(cos psi, sin psi)``, ``b`` perpendicular to
    it.  The constraint value is ``(u/a)**2 + (v/b)**2 - 1``, negative inside.
    """

    p: float
    q: float
    a: float
    b: float
    psi: float = 0.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("ellipse semi-axes must be positive")

    def constraint(self, f1, f2):
        # works on floats and arrays alike with identical rounding
        c, s = math.cos(self.psi), math.sin(self.psi)
        du, dv = f1 - self.p, f2 - self.q
        u = (du * c + dv * s) / self.a
        v = (dv * c - du * s) / self.b
        return u * u + v * v - 1.0


def _straight(x):
    return 1.0 - x


def _bulging(x):
    return 1.0 - x * x


SHAPES = {"convex": _straight, "concave": _bulging}


@dataclass(frozen=True)
class LirLikeSpec:
    """Parameters of a LIR-style problem.

    ``front_shape`` is ``"convex"`` (straight front ``f2 = 1 - f1``) or
    ``"concave"`` (``f2 = 1 - f1**2``); ``pf_blocking`` records whether some
    obstacle cuts the unconstrained front.
    """

    name: str = "LIR-LIKE"
    front_shape: str = "convex"
    distance_weight: float = 1.0
    obstacles: tuple[Ellipse, ...] = ()
    pf_blocking: bool = False
    n: int = 30

    def __post_init__(self):
        if self.front_shape not in SHAPES:
            raise ValueError(f"front_shape must be one of {sorted(SHAPES)}")
        if self.distance_weight < 0:
            raise ValueError("distance_weight must be non-negative")
        if self.n < 2:
            raise ValueError("need at least two decision variables")


class _LirEvaluator:
    # a class rather than a closure so problems pickle into worker processes
    def __init__(self, spec: LirLikeSpec):
        self.spec = spec
        self.shape = SHAPES[spec.front_shape]

    def __call__(self, X):
        x1 = X[:, 0]
        t = X[:, 1:] - 0.5
        wd = self.spec.distance_weight * np.sum(t * t, axis=1)
        f1 = x1 + wd
        f2 = self.shape(x1) + wd
        F = np.stack([f1, f2], axis=1)
        G = None
        if self.spec.obstacles:
            G = np.stack([e.constraint(f1, f2) for e in self.spec.obstacles], axis=1)
        return F, G, None

    def single(self, x):
        t = x[1:] - 0.5
        wd = self.spec.distance_weight * float((t * t).sum())
        x1 = float(x[0])
        f1 = x1 + wd
        f2 = self.shape(x1) + wd
        cv = 0.0
        for e in self.spec.obstacles:
            g = e.constraint(f1, f2)
            if g < 0.0:
                cv += -g
        return np.array([f1, f2]), cv


class _LirCandidates:
    def __init__(self, spec: LirLikeSpec, evaluator: _LirEvaluator):
        self.spec = spec
        self.evaluator = evaluator

    def on_curve(self, resolution: int = 100_001) -> np.ndarray:
        X = np.full((resolution, self.spec.n), 0.5)
        X[:, 0] = np.linspace(0.0, 1.0, resolution)
        return X

    def __call__(self, count: int):
        X = self.on_curve()
        if not self.spec.obstacles:
            return X, "analytic"
        _, G, _ = self.evaluator(X)
        if np.all(G >= 0):
            return X, "analytic"
        # Some obstacle cuts the curve: the constrained front may bend along
        # an ellipse boundary above it, so scan (position, distance) densely.
        return self.off_curve(), "sampled"

    def off_curve(self, n_pos: int = 2000, n_dist: int = 500) -> np.ndarray:
        n = self.spec.n
        w = max(self.spec.distance_weight, 1e-12)
        reach = max((max(e.a, e.b) for e in self.spec.obstacles), default=0.0)
        d_max = min(2.5 * reach / w, (n - 1) / 4.0)
        pos = np.linspace(0.0, 1.0, n_pos)
        dist = d_max * np.linspace(0.0, 1.0, n_dist) ** 2
        P, D = np.meshgrid(pos, dist, indexing="ij")
        X = np.empty((P.size, n))
        X[:, 0] = P.ravel()
        X[:, 1:] = (0.5 + np.sqrt(D.ravel() / (n - 1)))[:, None]
        return X


def make_lir_like(spec: LirLikeSpec) -> ProblemDefinition:
    """Build a LIR-style problem on ``[0, 1]**n`` from ``spec``."""
    evaluator = _LirEvaluator(spec)
    blurb = f"{spec.front_shape} front, {len(spec.obstacles)} elliptic obstacle(s), w={spec.distance_weight:g}"
    return ProblemDefinition(
        name=spec.name,
        n=spec.n,
        m=2,
        lower=np.zeros(spec.n),
        upper=np.ones(spec.n),
        evaluator=evaluator,
        vectorized=True,
        front_candidates=_LirCandidates(spec, evaluator),
        description=blurb,
    )


class _ShellEvaluator:
    def __init__(self, weight: float, shells: tuple[tuple[float, float], ...]):
        self.weight = weight
        self.shells = shells

    def __call__(self, X):
        a = 0.5 * math.pi * X[:, 0]
        b = 0.5 * math.pi * X[:, 1]
        t = X[:, 2:] - 0.5
        r = 1.0 + self.weight * (t * t).sum(axis=1)
        F = np.stack([r * np.cos(a) * np.cos(b), r * np.cos(a) * np.sin(b), r * np.sin(a)], axis=1)
        G = None
        if self.shells:
            R2 = r * r
            G = np.stack([(R2 - lo * lo) * (R2 - hi * hi) for lo, hi in self.shells], axis=1)
        return F, G, None

    def single(self, x):
        # same operation order as __call__; trig goes through numpy so both paths round alike
        ang = (0.5 * math.pi) * x[:2]
        c = np.cos(ang)
        s = np.sin(ang)
        t = x[2:] - 0.5
        r = 1.0 + self.weight * float((t * t).sum())
        ca, cb, sb, sa = float(c[0]), float(c[1]), float(s[1]), float(s[0])
        f = np.array([r * ca * cb, r * ca * sb, r * sa])
        R2 = r * r
        cv = 0.0
        for lo, hi in self.shells:
            g = (R2 - lo * lo) * (R2 - hi * hi)
            if g < 0.0:
                cv += -g
        return f, cv


class _ShellCandidates:
    def __init__(self, n: int):
        self.n = n

    def __call__(self, count: int):
        # midpoints of an equal-area (height, azimuth) grid on the unit octant
        side = math.ceil(math.sqrt(count))
        h = (np.arange(side) + 0.5) / side
        phi = (np.arange(side) + 0.5) / side
        H, Phi = np.meshgrid(h, phi, indexing="ij")
        X = np.full((side * side, self.n), 0.5)
        X[:, 0] = np.arcsin(H.ravel()) / (0.5 * math.pi)
        X[:, 1] = Phi.ravel()
        return X, "analytic"


def make_shell_problem(name: str = "LIR-C", n: int = 30, distance_weight: float = 1.0,
                       shells: Sequence[tuple[float, float]] = ((1.3, 1.6),)) -> ProblemDefinition:
    """Three objectives on a spherical front; radii inside any ``(lo, hi)`` shell are infeasible.

    The radius is ``1 + w * d(x)`` with ``d`` the distance function over
    ``x3..xn``, so the front is the unit sphere octant and every ray from the
    origin must cross each shell.
    """
    shells = tuple((float(lo), float(hi)) for lo, hi in shells)
    if any(not 1.0 < lo < hi for lo, hi in shells):
        raise ValueError("shells must satisfy 1 < lo < hi")
    return ProblemDefinition(
        name=name,
        n=n,
        m=3,
        lower=np.zeros(n),
        upper=np.ones(n),
        evaluator=_ShellEvaluator(distance_weight, shells),
        vectorized=True,
        front_candidates=_ShellCandidates(n),
        description=f"spherical front, {len(shells)} infeasible shell(s), w={distance_weight:g}",
    )


# -------------------------------------------------------- reference fronts


def thin_front(F: np.ndarray, count: int) -> np.ndarray:
    """Indices of ``count`` points of a nondominated set spread evenly along it.

    Two objectives: points are placed at equal arc-length steps of the
    polyline through the sorted front; jumps much longer than the typical
    spacing (gaps in a disconnected front) add no length.  More objectives:
    greedy farthest-point selection.
    """
    F = np.asarray(F, dtype=float)
    k = len(F)
    if count >= k:
        return np.arange(k)
    if F.shape[1] == 2:
        order = np.lexsort((F[:, 1], F[:, 0]))
        P = F[order]
        seg = np.sqrt(np.sum(np.diff(P, axis=0) ** 2, axis=1))
        typical = np.median(seg) if seg.size else 0.0
        seg = np.where(seg > 20.0 * typical, 0.0, seg)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.linspace(0.0, cum[-1], count)
        pos = np.clip(np.searchsorted(cum, targets), 1, k - 1)
        nearer_left = (targets - cum[pos - 1]) <= (cum[pos] - targets)
        pick = np.where(nearer_left, pos - 1, pos)
        chosen = list(dict.fromkeys(pick.tolist()))
        if len(chosen) < count:
            chosen = _farthest_fill(P, chosen, count)
        return np.sort(order[np.asarray(chosen)])
    return np.sort(np.asarray(_farthest_fill(F, [int(np.argmin(F[:, 0]))], count)))


def _farthest_fill(P: np.ndarray, chosen: list[int], count: int) -> list[int]:
    chosen = list(chosen)
    dmin = np.full(len(P), np.inf)
    for c in chosen:
        dmin = np.minimum(dmin, np.sum((P - P[c]) ** 2, axis=1))
    while len(chosen) < count:
        c = int(np.argmax(dmin))
        chosen.append(c)
        dmin = np.minimum(dmin, np.sum((P - P[c]) ** 2, axis=1))
    return chosen


def sample_reference_front(problem: ProblemDefinition, count: int) -> ReferenceFront:
    """Sample ``count`` feasible, mutually nondominated points spread over the front.

    Uses the problem's own candidate generator when it has one; otherwise a
    brute-force scan of ``2**20`` scrambled Sobol points over the whole box.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if problem.front_candidates is not None:
        X, source = problem.front_candidates(count)
    else:
        sobol = qmc.Sobol(problem.n, scramble=True, seed=0)
        X = qmc.scale(sobol.random_base2(20), problem.lower, problem.upper)
        source = "sampled"
    F, cv = _evaluate_chunked(problem, X)
    feasible = cv == 0.0
    if not np.any(feasible):
        raise ValueError(f"{problem.name}: no feasible sample found while building the reference front")
    X, F = X[feasible], F[feasible]
    _, first = np.unique(F, axis=0, return_index=True)
    first = np.sort(first)
    X, F = X[first], F[first]
    nd = nondominated_mask(F)
    X, F = X[nd], F[nd]
    if len(F) < count:
        raise ValueError(f"{problem.name}: only {len(F)} distinct front samples for {count} requested")
    keep = thin_front(F, count)
    return ReferenceFront(points=F[keep], decisions=X[keep], source=source)


def _evaluate_chunked(problem, X, chunk=200_000):
    Fs, cvs = [], []
    for start in range(0, len(X), chunk):
        F, cv = problem.evaluate_cv(X[start:start + chunk])
        Fs.append(F)
        cvs.append(cv)
    return np.concatenate(Fs), np.concatenate(cvs)


# ----------------------------------------------------------------- registry


def _sanity_convex():
    return make_lir_like(LirLikeSpec(name="SANITY-CONVEX", front_shape="convex"))


def _lir_a():
    return make_lir_like(LirLikeSpec(name="LIR-A", front_shape="convex", distance_weight=10.0,
                                     obstacles=WALLS))


def _lir_b():
    return make_lir_like(LirLikeSpec(name="LIR-B", front_shape="concave", distance_weight=10.0,
                                     obstacles=WALLS + (Ellipse(0.5, 0.75, 0.1, 0.1),), pf_blocking=True))


def _lir_c():
    return make_shell_problem("LIR-C", distance_weight=10.0, shells=((1.05, 1.11), (1.17, 1.76)))


# Two thick walls laid across the (1, 1) diagonal between the far-away random
# population (w=10 puts it at f1 + f2 of roughly 33 to 65) and the front.
# Semi-axes 0.632 along the diagonal and 1.26 / 2.53 across it; every ray
# from the initial region to the front crosses both.
_DIAG = 0.25 * math.pi
WALLS = (
    Ellipse(1.6, 1.6, 0.632, 1.26, _DIAG),
    Ellipse(2.5, 2.5, 0.632, 2.53, _DIAG),
)

_BUILTINS: dict[str, Callable[[], ProblemDefinition]] = {
    "SANITY-CONVEX": _sanity_convex,
    "LIR-A": _lir_a,
    "LIR-B": _lir_b,
    "LIR-C": _lir_c,
}
_REGISTRY: dict[str, ProblemDefinition] = {}


def builtin_problems() -> list[ProblemDefinition]:
    return [get_problem(name) for name in _BUILTINS]


def list_problems() -> list[str]:
    return list(dict.fromkeys([*_BUILTINS, *_REGISTRY]))


def get_problem(name: str) -> ProblemDefinition:
    if name not in _REGISTRY:
        if name not in _BUILTINS:
            raise ProblemNotFound(f"unknown problem {name!r}; available: {', '.join(list_problems())}")
        _REGISTRY[name] = _BUILTINS[name]()
    return _REGISTRY[name]


def register_problem(problem: ProblemDefinition | str, n: int | None = None, m: int | None = None,
                     bounds=None, evaluator: Callable | None = None, *, replace: bool = False,
                     **kwargs) -> ProblemDefinition:
    """Add a problem to the registry, either ready-made or from its parts.

    ``bounds`` is a ``(lower, upper)`` pair; ``evaluator`` follows the
    :class:`ProblemDefinition` convention (per point unless ``vectorized=True``
    is passed).  An existing name is only overwritten with ``replace=True``.
    """
    if not isinstance(problem, ProblemDefinition):
        if n is None or m is None or bounds is None or evaluator is None:
            raise ValueError("register_problem needs n, m, bounds and evaluator")
        lower, upper = bounds
        problem = ProblemDefinition(name=problem, n=n, m=m, lower=lower, upper=upper, evaluator=evaluator, **kwargs)
    if (problem.name in _REGISTRY or problem.name in _BUILTINS) and not replace:
        raise ValueError(f"problem {problem.name!r} is already registered")
    _REGISTRY[problem.name] = problem
    return problem
