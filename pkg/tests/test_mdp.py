import numpy as np
import pytest
from hypothesis import given, strategies as st

from regretlab.mdp import (InvalidMdpError, Mdp, UsageError, dumps, inverse_cdf, load, loads,
                           policy_rewards, policy_transition_matrix, save, step, transition_cdf,
                           validate_mdp)


def two_state():
    P = np.array([[[0.5, 0.5]], [[0.2, 0.8]]])
    r = np.array([[0.0], [1.0]])
    return Mdp(P, r)


def test_valid_mdp_has_no_violations():
    assert validate_mdp(two_state()) == []


def test_row_sum_violation_names_pair():
    P = np.array([[[0.5, 0.4]], [[0.2, 0.8]]])
    out = validate_mdp(Mdp(P, np.zeros((2, 1))))
    assert len(out) == 1 and "(0,0)" in out[0]


def test_reward_range_violation_names_pair():
    P = np.array([[[0.5, 0.5]], [[0.2, 0.8]]])
    r = np.array([[0.0], [1.5]])
    out = validate_mdp(Mdp(P, r))
    assert len(out) == 1 and "(1,0)" in out[0] and "reward" in out[0]


def test_negative_entry_and_start_state_reported():
    P = np.array([[[1.2, -0.2]], [[0.2, 0.8]]])
    out = validate_mdp(Mdp(P, np.zeros((2, 1)), start_state=3))
    assert any("negative" in v for v in out)
    assert any("start state" in v for v in out)


def test_validated_raises_with_all_violations():
    P = np.array([[[0.5, 0.4]], [[0.2, 0.7]]])
    with pytest.raises(InvalidMdpError) as info:
        Mdp(P, np.zeros((2, 1))).validated()
    assert len(info.value.violations) == 2


def test_shape_mismatch_rejected():
    with pytest.raises(InvalidMdpError):
        Mdp(np.ones((2, 1, 3)) / 3, np.zeros((2, 1)))
    with pytest.raises(InvalidMdpError):
        Mdp(np.ones((2, 1, 2)) / 2, np.zeros((2, 2)))


def test_arrays_are_read_only():
    m = two_state()
    with pytest.raises(ValueError):
        m.transitions[0, 0, 0] = 1.0


def test_step_point_mass(rng):
    P = np.zeros((3, 1, 3))
    P[:, 0, 2] = 1.0
    m = Mdp(P, np.full((3, 1), 0.7))
    for _ in range(100):
        s, r = step(m, 0, 0, rng)
        assert s == 2 and r == 0.7


def test_step_frequency_matches_probability(rng):
    m = two_state()
    n = 10**5
    hits = sum(step(m, 0, 0, rng)[0] == 0 for _ in range(n))
    sigma = np.sqrt(0.25 / n)
    assert abs(hits / n - 0.5) <= 3 * sigma


def test_step_consumes_one_uniform():
    m = two_state()
    a, b = np.random.default_rng(5), np.random.default_rng(5)
    step(m, 0, 0, a)
    b.random()
    assert a.random() == b.random()


def test_step_rejects_bad_indices(rng):
    m = two_state()
    with pytest.raises(UsageError):
        step(m, 2, 0, rng)
    with pytest.raises(UsageError):
        step(m, 0, 1, rng)


def test_inverse_cdf_never_picks_zero_mass_index():
    probs = np.array([0.1, 0.2, 0.7 - 1e-16, 0.0])
    assert inverse_cdf(probs, np.nextafter(1.0, 0.0)) == 2
    cdf = transition_cdf(probs)
    assert np.isinf(cdf[2]) and np.isinf(cdf[3])


@given(st.lists(st.floats(0, 1), min_size=2, max_size=6), st.floats(0, 1, exclude_max=True))
def test_inverse_cdf_selects_positive_mass(weights, u):
    w = np.array(weights)
    if w.sum() <= 0:
        w[0] = 1.0
    probs = w / w.sum()
    assert probs[inverse_cdf(probs, u)] > 0


def test_policy_matrix_rows_and_identity():
    m = two_state()
    M = policy_transition_matrix(m, np.array([0, 0]))
    assert np.array_equal(M, [[0.5, 0.5], [0.2, 0.8]])
    ident = Mdp(np.eye(3)[:, None, :], np.zeros((3, 1)))
    assert np.array_equal(policy_transition_matrix(ident, np.zeros(3, dtype=int)), np.eye(3))
    assert np.array_equal(policy_rewards(m, np.array([0, 0])), [0.0, 1.0])


def test_policy_checks():
    m = two_state()
    with pytest.raises(UsageError):
        policy_transition_matrix(m, np.array([0]))
    with pytest.raises(UsageError):
        policy_transition_matrix(m, np.array([0, 1]))
    with pytest.raises(UsageError):
        policy_transition_matrix(m, np.array([0.0, 0.0]))


def test_text_round_trip_is_exact(tmp_path, rng):
    P = rng.dirichlet(np.ones(4), size=(4, 3))
    m = Mdp(P, rng.random((4, 3)), start_state=2)
    assert loads(dumps(m)) == m
    path = tmp_path / "m.txt"
    save(m, path)
    assert load(path) == m


def test_text_format_errors():
    with pytest.raises(InvalidMdpError):
        loads("")
    with pytest.raises(InvalidMdpError, match="missing"):
        loads("2 1 0\n0 0 0.0 1.0 0.0\n")
    with pytest.raises(InvalidMdpError, match="duplicate"):
        loads("1 1 0\n0 0 0.0 1.0\n0 0 0.0 1.0\n")
    with pytest.raises(InvalidMdpError, match="fields"):
        loads("1 1 0\n0 0 0.0\n")


def test_text_format_allows_comments():
    m = loads("# chain\n1 1 0  # header\n\n0 0 0.25 1.0\n")
    assert m.rewards[0, 0] == 0.25
