import math

import numpy as np
import pytest

import moead_acdp.engine as engine
from moead_acdp.constraints import CDP, ComparatorContext
from moead_acdp.core import EvaluationError
from moead_acdp.engine import AlgoConfig, Archive, RunState, lattice_divisions, run, update_subproblems
from moead_acdp.metrics import nondominated_filter
from moead_acdp.problems import ProblemDefinition, get_problem
from moead_acdp.variation import VariationConfig

SMALL = dict(N=30, T=10, eval_budget=None, generations=15)


def small(**kw):
    return AlgoConfig(**{**SMALL, **kw})


def test_config_defaults_and_generation_count():
    c = AlgoConfig()
    assert (c.N, c.T, c.delta, c.n_r, c.eval_budget) == (300, 30, 0.9, 2, 150_000)
    assert c.max_generations == 499
    assert AlgoConfig(N=100, eval_budget=20_000).max_generations == 199
    assert AlgoConfig(generations=7, eval_budget=None).max_generations == 7


@pytest.mark.parametrize("bad", [dict(N=2), dict(T=0), dict(T=400), dict(n_r=0), dict(n_r=31), dict(delta=1.5),
                                 dict(eval_budget=None), dict(generations=-1), dict(generations=600)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        AlgoConfig(**bad)


def test_config_round_trip():
    c = AlgoConfig(N=50, comparator="sr", comparator_params={"sr": 0.05}, variation=VariationConfig(CR=0.9))
    assert AlgoConfig.from_dict(c.to_dict()) == c


def test_lattice_divisions():
    assert lattice_divisions(3, 100) == 12  # 91 vectors
    assert lattice_divisions(3, 300) == 23  # 300 vectors
    assert lattice_divisions(2, 300) == 299


def test_zero_generations_keeps_initial_feasible_front():
    p = get_problem("LIR-A")
    res = run(p, small(generations=0, comparator="cdp"), keep_population=True)
    pop = res.final_population
    mask = pop.CV == 0
    expected = nondominated_filter(pop.F[mask]) if mask.any() else np.empty((0, 2))
    assert np.array_equal(nondominated_filter(res.archive_F), expected)
    assert res.evaluations == 30 and res.generations == 0


def test_run_is_deterministic():
    p = get_problem("LIR-B")
    a = run(p, small(seed=3))
    b = run(p, small(seed=3))
    assert a.archive_F.tobytes() == b.archive_F.tobytes()
    assert a.archive_X.tobytes() == b.archive_X.tobytes()
    assert a.metrics == b.metrics and a.evaluations == b.evaluations
    c = run(p, small(seed=4))
    assert c.archive_F.tobytes() != a.archive_F.tobytes()


def test_evaluation_accounting_and_ideal_monotone():
    p = get_problem("LIR-A")
    seen = []
    cfg = AlgoConfig(N=40, T=8, eval_budget=1000)
    res = run(p, cfg, callback=lambda s: seen.append((s.generation, s.evaluations, s.ideal.copy())))
    assert res.evaluations == 40 * (cfg.max_generations + 1) <= 1000
    assert [g for g, _, _ in seen] == list(range(cfg.max_generations + 1))
    assert all(e == 40 * (g + 1) for g, e, _ in seen)
    ideals = np.array([z for _, _, z in seen])
    assert np.all(np.diff(ideals, axis=0) <= 0)


def test_replacement_cap_instrumented(monkeypatch):
    changed = []
    original = update_subproblems

    def counting(comparator, state, weights, slots, y, fy, cvy, ctx, draws, n_r):
        before = state.X.copy()
        hits = original(comparator, state, weights, slots, y, fy, cvy, ctx, draws, n_r)
        changed.append(int(np.sum(np.any(before != state.X, axis=1))))
        assert len(hits) <= n_r
        return hits

    monkeypatch.setattr(engine, "update_subproblems", counting)
    for name in ("acdp", "cdp", "epsilon", "cmoead", "sr"):
        changed.clear()
        res = run(get_problem("LIR-B"), small(comparator=name, n_r=2, seed=11), keep_population=True)
        assert changed and max(changed) <= 2
        assert res.final_population.replacements.sum() == 30 * 15


def _toy_state(F, CV, z=(0.0, 0.0)):
    F = np.asarray(F, dtype=float)
    return RunState(X=np.arange(len(F), dtype=float)[:, None] * np.ones((1, 2)), F=F.copy(),
                    CV=np.asarray(CV, dtype=float), ideal=np.asarray(z, dtype=float))


def test_update_rejecting_child_changes_nothing():
    state = _toy_state([[0.1, 0.1]] * 4, [0.0] * 4)
    W = np.full((4, 2), 0.5)
    hits = update_subproblems(CDP(), state, W, np.arange(4), np.array([9.0, 9.0]), np.array([5.0, 5.0]), 0.0,
                              ComparatorContext(), np.zeros(4), 2)
    assert hits.size == 0 and np.all(state.F == 0.1)


def test_update_caps_and_full_replacement():
    W = np.array([[0.0, 1.0], [1 / 3, 2 / 3], [2 / 3, 1 / 3], [1.0, 0.0]])
    Wf = np.maximum(W, 1e-6)
    y, fy = np.array([7.0, 7.0]), np.array([0.1, 0.1])
    state = _toy_state([[1.0, 1.0]] * 4 + [[2.0, 2.0]], [0.0] * 5)
    W5 = np.vstack([Wf, [0.5, 0.5]])
    slots = np.array([4, 2, 0, 1, 3])
    hits = update_subproblems(CDP(), state, W5, slots, y, fy, 0.0, ComparatorContext(), np.zeros(5), 2)
    assert hits.tolist() == [4, 2]
    assert np.array_equal(state.F[[4, 2]], [fy, fy]) and np.all(state.F[[0, 1, 3]] == 1.0)
    # n_r equal to the population size: every feasible incumbent worse under rule 1 goes
    state = _toy_state([[1.0, 1.0]] * 4, [0.0] * 4)
    hits = update_subproblems(CDP(), state, Wf, np.arange(4), y, fy, 0.0, ComparatorContext(), np.zeros(4), 4)
    assert sorted(hits.tolist()) == [0, 1, 2, 3]


def test_archive_examples():
    a = Archive(1, 2)
    a.update(np.zeros((2, 1)), np.array([[1.0, 1.0], [0.0, 2.0]]), np.array([0.1, 0.2]))
    assert len(a) == 0
    a.update(np.zeros((1, 1)), np.array([[1.0, 2.0]]), np.zeros(1))
    a.update(np.ones((1, 1)), np.array([[0.5, 0.5]]), np.zeros(1))
    assert a.F.tolist() == [[0.5, 0.5]]
    a.update(np.full((1, 1), 2.0), np.array([[0.5, 0.5]]), np.zeros(1))
    assert a.F.tolist() == [[0.5, 0.5]] and a.X.tolist() == [[1.0]]  # existing member kept


def test_archive_idempotent_and_evictions_are_dominated(rng):
    a = Archive(2, 2)
    for _ in range(40):
        F = rng.random((15, 2))
        CV = np.where(rng.random(15) < 0.3, 0.1, 0.0)
        before = a.F.copy()
        a.update(rng.random((15, 2)), F, CV)
        for old in before:
            if not any(np.array_equal(old, cur) for cur in a.F):
                assert any(np.all(cur <= old) for cur in a.F)
        snapshot = a.F.copy()
        a.update(np.zeros((len(snapshot), 2)), snapshot, np.zeros(len(snapshot)))
        assert np.array_equal(a.F, snapshot)


def test_archive_cap_truncates_by_crowding():
    a = Archive(1, 2, cap=5)
    t = np.linspace(0, 1, 20)
    a.update(t[:, None], np.stack([t, 1 - t], axis=1), np.zeros(20))
    assert len(a) == 5
    assert {0.0, 1.0} <= set(a.F[:, 0].tolist())


@pytest.mark.parametrize("name", ["SANITY-CONVEX", "LIR-A", "LIR-B", "LIR-C"])
def test_archive_feasible_and_nondominated(name):
    p = get_problem(name)
    res = run(p, small(N=40, generations=25))
    F, cv = p.evaluate_cv(res.archive_X) if len(res.archive_X) else (np.empty((0, p.m)), np.empty(0))
    assert np.all(cv == 0) and np.array_equal(F, res.archive_F)
    assert len(nondominated_filter(res.archive_F)) == len(res.archive_F)


def test_three_objective_population_is_lattice_sized():
    res = run(get_problem("LIR-C"), AlgoConfig(N=100, T=10, eval_budget=None, generations=2), keep_population=True)
    assert len(res.final_population.X) == 91 and res.config["N"] == 91


def test_evaluation_failure_reports_location():
    calls = {"n": 0}

    def flaky(x):
        calls["n"] += 1
        bad = calls["n"] > 45
        return np.array([math.nan if bad else x[0], 1 - x[0]]), None, None

    p = ProblemDefinition("T-FLAKY", n=2, m=2, lower=0, upper=1, evaluator=flaky)
    with pytest.raises(EvaluationError) as info:
        run(p, AlgoConfig(N=30, T=5, eval_budget=None, generations=3))
    assert info.value.generation == 1 and info.value.subproblem is not None


def test_unknown_comparator():
    with pytest.raises(KeyError):
        run(get_problem("SANITY-CONVEX"), small(comparator="nope"))
