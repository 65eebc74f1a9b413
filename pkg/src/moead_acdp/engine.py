"""The MOEA/D main loop with a pluggable subproblem-update comparator."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .constraints import Comparator, ComparatorContext, make_comparator
from .core import EvaluationError, RandomStream
from .decomposition import WEIGHT_FLOOR, build_neighborhoods, generate_weights, lattice_size
from .metrics import MetricReport, evaluate_metrics, nondominated_mask
from .variation import VariationConfig, de_rand1, polynomial_mutation, repair_bounds

__all__ = ["AlgoConfig", "Archive", "RunState", "RunResult", "run", "update_subproblems", "lattice_divisions"]


@dataclass(frozen=True)
class AlgoConfig:
    """Algorithm settings; the defaults are the reference experimental settings.

    The generation count is ``generations`` when given, otherwise the largest
    count whose evaluations (``N`` initial plus ``N`` per generation) fit in
    ``eval_budget``.
    """

    N: int = 300
    T: int = 30
    delta: float = 0.9
    n_r: int = 2
    eval_budget: int | None = 150_000
    generations: int | None = None
    comparator: str = "acdp"
    comparator_params: dict = field(default_factory=dict)
    variation: VariationConfig = field(default_factory=VariationConfig)
    seed: int = 0
    archive_cap: int | None = None

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("population size must be >= 3")
        if not 1 <= self.T <= self.N:
            raise ValueError("neighborhood size must lie in [1, N]")
        if not 1 <= self.n_r <= self.T:
            raise ValueError("n_r must lie in [1, T]")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.generations is None and self.eval_budget is None:
            raise ValueError("either generations or eval_budget is required")
        if self.generations is not None and self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.eval_budget is not None and self.N * (self.max_generations + 1) > self.eval_budget:
            raise ValueError(f"{self.max_generations} generations of N={self.N} exceed eval_budget={self.eval_budget}")

    @property
    def max_generations(self) -> int:
        if self.generations is not None:
            return self.generations
        return max((self.eval_budget - self.N) // self.N, 0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["comparator_params"] = dict(self.comparator_params)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AlgoConfig":
        d = dict(d)
        if "variation" in d and isinstance(d["variation"], dict):
            d["variation"] = VariationConfig(**d["variation"])
        return cls(**d)


def lattice_divisions(m: int, N: int) -> int:
    """Largest lattice parameter ``H`` giving at most ``N`` weight vectors."""
    H = 1
    while lattice_size(m, H + 1) <= N:
        H += 1
    return H


class Archive:
    """Unbounded (by default) set of feasible, mutually nondominated solutions."""

    def __init__(self, n: int, m: int, cap: int | None = None):
        self.X = np.empty((0, n))
        self.F = np.empty((0, m))
        self.cap = cap

    def __len__(self):
        return len(self.F)

    def update(self, X, F, CV) -> "Archive":
        feasible = np.asarray(CV) == 0.0
        Xa = np.concatenate([self.X, np.asarray(X)[feasible]])
        Fa = np.concatenate([self.F, np.asarray(F)[feasible]])
        # existing members come first, so they win duplicate collapse
        keep = nondominated_mask(Fa)
        self.X, self.F = Xa[keep], Fa[keep]
        if self.cap is not None and len(self.F) > self.cap:
            self._truncate()
        return self

    def _truncate(self):
        while len(self.F) > self.cap:
            worst = int(np.argmin(_crowding(self.F)))
            self.X = np.delete(self.X, worst, axis=0)
            self.F = np.delete(self.F, worst, axis=0)


def _crowding(F: np.ndarray) -> np.ndarray:
    k, m = F.shape
    dist = np.zeros(k)
    for i in range(m):
        order = np.argsort(F[:, i], kind="stable")
        span = F[order[-1], i] - F[order[0], i]
        dist[order[[0, -1]]] = np.inf
        if span > 0 and k > 2:
            dist[order[1:-1]] += (F[order[2:], i] - F[order[:-2], i]) / span
    return dist


@dataclass
class RunState:
    """Live working set of a run, handed to per-generation callbacks (do not mutate)."""

    X: np.ndarray
    F: np.ndarray
    CV: np.ndarray
    ideal: np.ndarray
    generation: int = 0
    evaluations: int = 0
    context: ComparatorContext | None = None
    replacements: np.ndarray | None = None


@dataclass
class RunResult:
    problem: str
    archive_X: np.ndarray
    archive_F: np.ndarray
    metrics: MetricReport | None
    config: dict
    seed: int
    evaluations: int
    generations: int
    wall_clock: float
    final_population: RunState | None = None

    @property
    def archive_size(self) -> int:
        return len(self.archive_F)


def update_subproblems(comparator: Comparator, state: RunState, weights, slots, y, fy, cvy,
                       ctx: ComparatorContext, draws, n_r: int) -> np.ndarray:
    """Offer child ``y`` to the incumbents of ``slots`` in order; replace at most ``n_r``.

    Every slot's decision depends only on the child, that slot's incumbent and
    the generation context, so the decisions are computed together and the
    first ``n_r`` accepting slots (in ``slots`` order) are replaced.
    ``weights`` must already be floored (see :func:`tchebycheff`).  Returns
    the replaced slot indices.
    """
    z = state.ideal
    Fx = state.F[slots]
    lam = weights[slots]
    gx = (np.abs(Fx - z) / lam).max(axis=1)
    gy = (np.abs(fy - z) / lam).max(axis=1)
    accept = comparator.decide(Fx, state.CV[slots], fy, cvy, gx, gy, z, ctx, draws)
    hits = slots[accept.nonzero()[0][:n_r]]
    if hits.size:
        state.X[hits] = y
        state.F[hits] = fy
        state.CV[hits] = cvy
    return hits


def run(problem, config: AlgoConfig, *, callback: Callable[[RunState], None] | None = None,
        compute_metrics: bool = True, keep_population: bool = False) -> RunResult:
    """Execute one seeded run and return its feasible nondominated archive."""
    started = time.perf_counter()
    n, m = problem.n, problem.m
    lower, upper = problem.lower, problem.upper
    streams = RandomStream(config.seed).substreams()
    init, mating, de_rng, mut_rng, comp_rng = (streams[k] for k in ("init", "mating", "de", "mutation", "comparator"))

    H = config.N - 1 if m == 2 else lattice_divisions(m, config.N)
    W = generate_weights(m, H)
    N = len(W)
    T = min(config.T, N)
    B = build_neighborhoods(W, T)
    W_floored = np.maximum(W, WEIGHT_FLOOR)
    everyone = np.arange(N)
    t_max = config.max_generations
    var = config.variation
    pm = var.mutation_rate(n)

    X = lower + (upper - lower) * init.random((N, n))
    F, CV = problem.evaluate_cv(X)
    state = RunState(X=X, F=F, CV=CV, ideal=F.min(axis=0), evaluations=N,
                     replacements=np.zeros(config.n_r + 1, dtype=np.int64))

    comparator = make_comparator(config.comparator, **config.comparator_params)
    comparator.setup(N, t_max, CV.copy())
    archive = Archive(n, m, config.archive_cap).update(X, F, CV)
    if callback is not None:
        callback(state)

    for k in range(1, t_max + 1):
        ctx = comparator.context(k, state.CV)
        state.generation = k
        state.context = ctx
        for j in mating.permutation(N):
            pool = B[j] if mating.random() < config.delta else everyone
            donors = pool if len(pool) >= 3 else everyone
            a, b, c = donors[mating.permutation(len(donors))[:3]]
            y = de_rand1(state.X[a], state.X[b], state.X[c], var.F, var.CR, de_rng, current=state.X[j])
            y = polynomial_mutation(y, pm, var.eta, lower, upper, mut_rng)
            y = repair_bounds(y, lower, upper)
            try:
                fy, cvy = problem.evaluate_one(y)
            except EvaluationError as exc:
                raise EvaluationError(str(exc), generation=k, subproblem=int(j)) from exc
            state.evaluations += 1
            state.ideal = np.minimum(state.ideal, fy)
            slots = mating.permutation(pool)
            draws = comp_rng.random(len(slots))
            hits = update_subproblems(comparator, state, W_floored, slots, y, fy, cvy, ctx, draws, config.n_r)
            state.replacements[len(hits)] += 1
        archive.update(state.X, state.F, state.CV)
        if callback is not None:
            callback(state)

    snapshot = replace(config, N=N, T=T).to_dict()
    metrics = evaluate_metrics(problem, archive.F) if compute_metrics else None
    return RunResult(
        problem=problem.name,
        archive_X=archive.X,
        archive_F=archive.F,
        metrics=metrics,
        config=snapshot,
        seed=config.seed,
        evaluations=state.evaluations,
        generations=t_max,
        wall_clock=time.perf_counter() - started,
        final_population=state if keep_population else None,
    )
