import numpy as np
import pytest

from splitkit.operators import FiniteSumOperator
from splitkit.problems import generate_saddle
from splitkit.sampling import (
    OracleScheme,
    RngStream,
    bernoulli,
    derive_seed,
    draw_index,
    importance_scheme,
    oracle_apply,
    uniform_scheme,
)


def _within_3_sigma(count, n, prob):
    sigma = np.sqrt(n * prob * (1 - prob))
    return abs(count - n * prob) <= 3 * sigma


def test_scheme_constants():
    lips = np.array([1.0, 2.0, 2.0])
    u = uniform_scheme(lips)
    assert u.mean_lipschitz == pytest.approx(np.sqrt(3 * 9.0))
    np.testing.assert_allclose(u.probabilities, 1 / 3)
    imp = importance_scheme(lips)
    assert imp.mean_lipschitz == pytest.approx(5.0)
    np.testing.assert_allclose(imp.probabilities, [0.2, 0.4, 0.4])
    assert imp.mean_lipschitz <= u.mean_lipschitz


def test_scheme_validation():
    with pytest.raises(ValueError):
        importance_scheme([1.0, 0.0])
    with pytest.raises(ValueError):
        OracleScheme("uniform", np.array([0.5, 0.6]), 1.0)
    with pytest.raises(ValueError):
        OracleScheme("other", np.array([1.0]), 1.0)


def test_draw_index_degenerate():
    rng = RngStream(3)
    scheme = uniform_scheme([2.0])
    assert all(draw_index(rng, scheme) == 0 for _ in range(100))


def test_draw_index_uniform_frequencies():
    rng = RngStream(11)
    scheme = uniform_scheme(np.ones(4))
    n = 10**6
    counts = np.bincount([draw_index(rng, scheme) for _ in range(n)], minlength=4)
    assert all(_within_3_sigma(c, n, 0.25) for c in counts), counts


def test_draw_index_importance_frequencies():
    rng = RngStream(12)
    scheme = importance_scheme([1.0, 3.0])
    n = 10**6
    counts = np.bincount([draw_index(rng, scheme) for _ in range(n)], minlength=2)
    assert _within_3_sigma(counts[0], n, 0.25) and _within_3_sigma(counts[1], n, 0.75), counts


def test_oracle_apply_uniform_scaling():
    op = FiniteSumOperator([lambda v: v, lambda v: 2 * v], [1.0, 2.0])
    x = np.array([1.0, -3.0])
    np.testing.assert_array_equal(oracle_apply(uniform_scheme(op.component_lipschitz), op, 0, x), 2 * x)
    with pytest.raises(IndexError):
        oracle_apply(uniform_scheme(op.component_lipschitz), op, 2, x)


@pytest.mark.parametrize("make", [uniform_scheme, importance_scheme])
def test_unbiased_by_enumeration(make):
    inst = generate_saddle(8, 4, seed=1)
    scheme = make(inst.B.component_lipschitz)
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.standard_normal(inst.dim)
        mean = sum(scheme.probabilities[i] * oracle_apply(scheme, inst.B, i, v) for i in range(scheme.n))
        full = inst.B.full_apply(v)
        assert np.linalg.norm(mean - full) <= 1e-10 * np.linalg.norm(full)


@pytest.mark.parametrize("make", [uniform_scheme, importance_scheme])
def test_mean_square_lipschitz_by_enumeration(make):
    inst = generate_saddle(6, 3, seed=2)
    scheme = make(inst.B.component_lipschitz)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        z1, z2 = rng.standard_normal(inst.dim), rng.standard_normal(inst.dim)
        second_moment = sum(
            scheme.probabilities[i]
            * np.sum((oracle_apply(scheme, inst.B, i, z1) - oracle_apply(scheme, inst.B, i, z2)) ** 2)
            for i in range(scheme.n)
        )
        assert second_moment <= scheme.mean_lipschitz**2 * np.sum((z1 - z2) ** 2) * (1 + 1e-12)


def test_bernoulli():
    rng = RngStream(5)
    assert all(bernoulli(rng, 1.0) for _ in range(1000))
    n = 10**6
    hits = sum(bernoulli(rng, 0.25) for _ in range(n))
    assert _within_3_sigma(hits, n, 0.25)
    s1, s2 = RngStream(42), RngStream(42)
    assert [bernoulli(s1, 0.3) for _ in range(500)] == [bernoulli(s2, 0.3) for _ in range(500)]
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            bernoulli(rng, bad)


def test_derive_seed_is_deterministic_and_distinct():
    assert derive_seed(7, 0, 1) == derive_seed(7, 0, 1)
    seeds = {derive_seed(7, s, j) for s in range(10) for j in range(3)}
    assert len(seeds) == 30
