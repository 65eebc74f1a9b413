import numpy as np
import pytest

from moead_acdp.variation import VariationConfig, de_rand1, polynomial_mutation, repair_bounds


class FixedDraws:
    """Stand-in generator returning scripted uniforms (integers() returns 0)."""

    def __init__(self, *arrays):
        self.arrays = [np.asarray(a, dtype=float) for a in arrays]

    def random(self, n=None):
        return self.arrays.pop(0)

    def integers(self, n):
        return 0


def test_de_examples(rng):
    base = np.array([0.2, 0.7])
    assert np.array_equal(de_rand1(base, [0.9, 0.1], [0.3, 0.3], 0.0, 1.0, rng), base)
    assert np.array_equal(de_rand1(base, [0.4, 0.4], [0.4, 0.4], 0.5, 1.0, rng), base)
    assert de_rand1([0.2], [0.8], [0.4], 0.5, 1.0, rng) == pytest.approx([0.4])


def test_de_binomial_mask_keeps_one_mutant_dimension():
    base, cur = np.zeros(4), np.full(4, 9.0)
    d1, d2 = np.ones(4), np.zeros(4)
    y = de_rand1(base, d1, d2, 1.0, 0.0, FixedDraws([0.5] * 4), current=cur)
    assert y.tolist() == [1.0, 9.0, 9.0, 9.0]
    y = de_rand1(base, d1, d2, 1.0, 0.5, FixedDraws([0.9, 0.1, 0.9, 0.1]), current=cur)
    assert y.tolist() == [1.0, 1.0, 9.0, 1.0]


def test_de_draw_count_independent_of_cr():
    a, b = np.random.default_rng(3), np.random.default_rng(3)
    de_rand1(np.zeros(5), np.ones(5), np.zeros(5), 0.5, 1.0, a)
    de_rand1(np.zeros(5), np.ones(5), np.zeros(5), 0.5, 0.2, b, current=np.ones(5))
    assert a.random() == b.random()


def test_mutation_examples(rng):
    x = np.array([0.3, 0.6])
    assert np.array_equal(polynomial_mutation(x, 0.0, 20.0, 0.0, 1.0, rng), x)
    y = polynomial_mutation([0.5], 1.0, 20.0, 0.0, 1.0, FixedDraws([0.0], [0.5]))
    assert y.tolist() == [0.5]
    y = polynomial_mutation([0.5], 1.0, 20.0, 0.0, 1.0, FixedDraws([0.0], [0.9]))
    assert y[0] == pytest.approx(0.5 + 0.5 * (1 - (2 * (1 - 0.9)) ** (1 / 21)), rel=1e-15)
    y = polynomial_mutation([0.5], 1.0, 20.0, 0.0, 1.0, FixedDraws([0.0], [0.1]))
    assert y[0] == pytest.approx(0.5 + ((2 * 0.1) ** (1 / 21) - 1) * 0.5, rel=1e-15)


def test_repair_examples():
    assert repair_bounds([0.3], 0, 1).tolist() == [0.3]
    assert repair_bounds([1.2], 0, 1).tolist() == [1.0]
    assert repair_bounds([-0.5, 0.3], [0, 0], [1, 1]).tolist() == [0.0, 0.3]


def test_offspring_stay_in_bounds_fuzz():
    rng = np.random.default_rng(5)
    n, trials = 10, 10_000  # 10^5 component applications
    lo, hi = -np.arange(n, dtype=float), np.arange(1, n + 1, dtype=float)
    for _ in range(trials):
        P = lo + (hi - lo) * rng.random((3, n))
        y = de_rand1(P[0], P[1], P[2], rng.uniform(0, 2), rng.random(), rng, current=P[0])
        y = repair_bounds(y, lo, hi)
        y = polynomial_mutation(y, rng.random(), rng.uniform(0, 50), lo, hi, rng)
        assert np.all((y >= lo) & (y <= hi))


def test_identity_pipeline_and_determinism():
    base = np.array([0.1, 0.5, 0.9])
    rng = np.random.default_rng(0)
    y = de_rand1(base, [0.3, 0.3, 0.3], [0.2, 0.8, 0.1], 0.0, 1.0, rng)
    y = polynomial_mutation(repair_bounds(y, 0, 1), 0.0, 20, 0, 1, rng)
    assert np.array_equal(y, base)
    outs = []
    for _ in range(2):
        r = np.random.default_rng(99)
        y = de_rand1(base, [0.3] * 3, [0.2] * 3, 0.5, 0.7, r, current=base)
        outs.append(polynomial_mutation(y, 0.5, 20, 0, 1, r).tobytes())
    assert outs[0] == outs[1]


def test_config_validation():
    assert VariationConfig().mutation_rate(30) == pytest.approx(1 / 30)
    assert VariationConfig(pm=0.2).mutation_rate(30) == 0.2
    for bad in ({"CR": 1.5}, {"pm": -0.1}, {"eta": -1}):
        with pytest.raises(ValueError):
            VariationConfig(**bad)
