import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from regretlab.mdp import UsageError
from regretlab.sampling import (DegenerateSupportError, PsrlConfig, TransitionCounts,
                                boosted_params, box_max_deviation, sample_beta, sample_dirichlet,
                                simple_optimistic_deltas, simple_optimistic_from_counts,
                                simple_optimistic_sample, stick_breaking_coordinates,
                                stick_breaking_quantities)
from oracles import vertex_max_deviation


def test_boosted_params_direct():
    counts = TransitionCounts.from_next_counts(np.array([[[3, 1, 0]]]))
    cfg = PsrlConfig(rho=0.1, psi=1, omega=1.0, kappa=2.0, small_n=0, horizon=10)
    np.testing.assert_array_equal(boosted_params(counts, 0, 0, cfg), [2.0, 1.0, 0.5])


def test_boosted_params_zero_counts():
    cfg = PsrlConfig(rho=0.1, psi=1, omega=3.0, kappa=1.5, small_n=0, horizon=10)
    counts = TransitionCounts.zeros(2, 1)
    np.testing.assert_array_equal(boosted_params(counts, 1, 0, cfg), [2.0, 2.0])


@pytest.mark.parametrize("bad", [dict(omega=0.0), dict(kappa=0.5), dict(psi=0), dict(rho=0.0),
                                 dict(rho=1.5), dict(horizon=0), dict(small_n=-1)])
def test_config_rejects_bad_values(bad):
    params = dict(rho=0.1, psi=1, omega=1.0, kappa=1.0, small_n=0, horizon=10)
    params.update(bad)
    with pytest.raises(UsageError):
        PsrlConfig(**params)


def test_theory_preset_values():
    S, A, T, rho = 3, 2, 10**4, 0.05
    cfg = PsrlConfig.theory(S, A, T, rho)
    omega = math.ceil(613 * math.log(2 * T * S * A / rho))
    assert cfg.omega == omega and cfg.kappa == omega / 6
    assert cfg.psi == math.ceil(4 * S * math.log(S * A / rho)) == 58
    assert cfg.small_n == max(math.ceil(math.sqrt(T * S / A)), math.ceil(12 * omega * S**2))


def test_practical_preset_values():
    cfg = PsrlConfig.practical(6, 2, 10**5)
    assert (cfg.omega, cfg.kappa, cfg.psi) == (1.0, 1.0, 6)
    assert cfg.small_n == math.ceil(math.sqrt(10**5 * 6 / 2)) == 548


def test_preset_overrides_and_unknown():
    cfg = PsrlConfig.from_preset("practical", 4, 2, 100, small_n=0)
    assert cfg.small_n == 0 and cfg.psi == 4
    with pytest.raises(UsageError):
        PsrlConfig.from_preset("bogus", 4, 2, 100)


def test_counts_invariant_and_record():
    c = TransitionCounts.zeros(2, 2)
    c.record(0, 1, 1)
    c.record(0, 1, 0)
    assert c.total[0, 1] == 2 and c.consistent()
    d = c.copy()
    d.record(1, 1, 1)
    assert c.total.sum() == 2 and d.total.sum() == 3


def test_dirichlet_mean(rng):
    x = sample_dirichlet(np.array([2.0, 2.0]), rng, size=10**5)
    se = math.sqrt(0.05 / 10**5)  # var of Beta(2, 2) is 1/20
    assert np.all(np.abs(x.mean(axis=0) - 0.5) <= 3 * se)


@pytest.mark.parametrize("a,b", [(0.3, 0.7), (2.0, 5.0), (40.0, 3.0)])
def test_dirichlet_marginal_is_beta(a, b, rng):
    x = sample_dirichlet(np.array([a, b]), rng, size=10**5)[:, 0]
    var = a * b / ((a + b) ** 2 * (a + b + 1))
    assert abs(x.mean() - a / (a + b)) <= 3 * math.sqrt(var / len(x))
    assert stats.kstest(x, stats.beta(a, b).cdf).pvalue > 1e-3


@given(st.lists(st.floats(0.01, 50), min_size=1, max_size=8), st.integers(0, 2**32 - 1))
def test_dirichlet_on_simplex(alpha, seed):
    x = sample_dirichlet(np.array(alpha), np.random.default_rng(seed), size=50)
    assert np.all(x >= 0)
    assert np.all(np.abs(x.sum(axis=-1) - 1) <= 1e-12)


def test_dirichlet_tiny_shapes_do_not_underflow(rng):
    x = sample_dirichlet(np.full(4, 1e-3), rng, size=1000)
    assert np.all(np.isfinite(x)) and np.all(np.abs(x.sum(axis=-1) - 1) <= 1e-12)


def test_dirichlet_aggregation(rng):
    alpha = np.array([1.5, 2.5, 3.0])
    merged = sample_dirichlet(alpha, rng, size=20000)[:, :2].sum(axis=1)
    direct = sample_dirichlet(np.array([4.0, 3.0]), rng, size=20000)[:, 0]
    assert stats.ks_2samp(merged, direct).pvalue > 1e-3


def test_dirichlet_batched_shapes(rng):
    alpha = np.ones((3, 4, 5))
    assert sample_dirichlet(alpha, rng).shape == (3, 4, 5)
    assert sample_dirichlet(alpha[0, 0], rng, size=(2, 7)).shape == (2, 7, 5)


@pytest.mark.parametrize("alpha", [[1.0, 0.0], [1.0, -2.0], [np.nan, 1.0], []])
def test_dirichlet_rejects_nonpositive(alpha, rng):
    with pytest.raises(UsageError):
        sample_dirichlet(np.array(alpha), rng)


def test_beta_uniform_ks(rng):
    x = sample_beta(1.0, 1.0, rng, size=10**5)
    assert stats.kstest(x, "uniform").pvalue > 1e-3


def test_beta_moments(rng):
    x = sample_beta(6.0, 6.0, rng, size=10**5)
    var = 36 / (144 * 13)
    assert abs(x.mean() - 0.5) <= 3 * math.sqrt(var / len(x))
    # variance of the sample variance for a Beta uses the fourth central moment
    m4 = np.mean((x - x.mean()) ** 4)
    assert abs(x.var() - var) <= 3 * math.sqrt((m4 - var**2) / len(x))
    assert isinstance(sample_beta(2.0, 3.0, rng), float)
    with pytest.raises(UsageError):
        sample_beta(0.0, 1.0, rng)


def test_simple_sampling_zero_counts_is_a_corner(rng):
    q = simple_optimistic_from_counts(np.zeros(4), rng, size=4000)
    assert np.all(q.max(axis=1) == 1.0) and np.all(q.sum(axis=1) == 1.0)
    freq = np.bincount(q.argmax(axis=1), minlength=4) / 4000
    assert np.all(np.abs(freq - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / 4000))


def test_simple_sampling_deltas_formula():
    p_hat, delta = simple_optimistic_deltas(np.array([30, 70]))
    L = math.log(8)
    np.testing.assert_allclose(delta, np.sqrt(3 * np.array([0.3, 0.7]) * L / 100) + 3 * L / 100)
    np.testing.assert_allclose(p_hat, [0.3, 0.7])


def test_simple_sampling_lower_bound_and_sum(rng):
    counts = np.array([50, 50])
    p_hat, delta = simple_optimistic_deltas(counts)
    lower = np.maximum(p_hat - delta, 0)
    q = simple_optimistic_from_counts(counts, rng, size=1000)
    assert np.all(np.abs(q.sum(axis=1) - 1) <= 1e-12) and np.all(q >= lower - 1e-15)


def _simple_reference(counts, corner):
    counts = np.asarray(counts, dtype=float)
    S, n = len(counts), counts.sum()
    q = np.zeros(S)
    if n > 0:
        for i in range(S):
            ph = counts[i] / n
            q[i] = max(ph - (math.sqrt(3 * ph * math.log(4 * S) / n) + 3 * math.log(4 * S) / n), 0.0)
    q[corner] += 1.0 - q.sum()
    return q


@given(st.lists(st.integers(0, 500), min_size=2, max_size=6), st.integers(0, 2**32 - 1))
def test_simple_sampling_matches_elementwise_reference(counts, seed):
    a = simple_optimistic_from_counts(np.array(counts), np.random.default_rng(seed))
    corner = int(np.random.default_rng(seed).integers(0, len(counts)))
    np.testing.assert_allclose(a, _simple_reference(counts, corner), atol=1e-14)
    assert abs(a.sum() - 1) <= 1e-12 and np.all(a >= 0)


def test_simple_sampling_converges_to_empirical(rng):
    counts = np.array([2, 3, 5]) * 10**7
    q = simple_optimistic_from_counts(counts, rng)
    assert np.sum(np.abs(q - [0.2, 0.3, 0.5])) < 0.01


def test_simple_sample_by_pair(rng):
    c = TransitionCounts.from_next_counts(np.array([[[4, 0]], [[0, 9]]]))
    assert simple_optimistic_sample(c, 1, 0, rng).shape == (2,)


def test_box_max_deviation_examples():
    assert box_max_deviation([0.5, 0.5], [0.5, 0.5], 3.0) == 0.0
    assert box_max_deviation([0.6, 0.4], [0.5, 0.5], 2.0) == pytest.approx(0.2)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.floats(0.0, 5.0))
def test_box_max_deviation_matches_vertex_and_grid(seed, S, height):
    rng = np.random.default_rng(seed)
    q, p = rng.dirichlet(np.ones(S)), rng.dirichlet(np.ones(S))
    got = box_max_deviation(q, p, height)
    assert got == pytest.approx(vertex_max_deviation(q, p, height), abs=1e-12)
    assert got == pytest.approx(0.5 * height * np.abs(q - p).sum(), abs=1e-12)
    grid = np.linspace(0, height, 5)
    best = max(float((q - p) @ np.array(h)) for h in itertools.product(grid, repeat=S))
    assert got == pytest.approx(best, abs=1e-12)


def test_stick_breaking_two_state():
    h = np.array([0.9, 0.2])
    sb = stick_breaking_quantities(np.array([0.5, 0.5]), h)
    assert sb.gamma[0] == pytest.approx(0.25)
    assert sb.H[0] == pytest.approx(0.2)
    assert sb.c[0] == pytest.approx(0.7)


def test_stick_breaking_constant_h():
    sb = stick_breaking_quantities(np.array([0.2, 0.3, 0.5]), np.full(3, 4.0))
    np.testing.assert_allclose(sb.c, 0.0, atol=1e-15)


def test_stick_breaking_degenerate_support():
    with pytest.raises(DegenerateSupportError):
        stick_breaking_quantities(np.array([0.5, 0.5, 0.0]), np.zeros(3))


@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_stick_breaking_identities_match_direct_dot_product(seed, S):
    """(p~ - p).h written in stick-breaking coordinates, with either vector's suffix weights."""
    rng = np.random.default_rng(seed)
    p, pt = rng.dirichlet(np.ones(S)) + 1e-3, rng.dirichlet(np.ones(S)) + 1e-3
    p, pt = p / p.sum(), pt / pt.sum()
    h = rng.random(S)
    direct = float((pt - p) @ h)
    sb, sbt = stick_breaking_quantities(p, h), stick_breaking_quantities(pt, h)
    dy = (sbt.y - sb.y)[:-1]
    assert float(np.sum(dy * sb.c * sbt.tail[:-1])) == pytest.approx(direct, abs=1e-10)
    assert float(np.sum(dy * sbt.c * sb.tail[:-1])) == pytest.approx(direct, abs=1e-10)


def test_stick_breaking_coordinates():
    y = stick_breaking_coordinates(np.array([[0.2, 0.3, 0.5]]))
    np.testing.assert_allclose(y, [[0.2, 0.375, 1.0]])
