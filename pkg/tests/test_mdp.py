import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tddr.errors import ConfigurationError
from tddr.mdp import MdpSpec, bellman_backup, make_random_mdp, value_iteration

# frozen from tests/oracles/forward_oracles.py: hand recursion on the 2-state chain
CHAIN_Q_STAR = [9.0, 10.0]


def test_single_state_single_action_is_forced():
    mdp = make_random_mdp(1, 1, seed=3)
    np.testing.assert_array_equal(mdp.transition, [[[1.0]]])


def test_same_seed_same_spec():
    a, b = make_random_mdp(6, 4, 7), make_random_mdp(6, 4, 7)
    assert a.transition.tobytes() == b.transition.tobytes()
    assert a.reward.tobytes() == b.reward.tobytes()


@pytest.mark.parametrize("sparsity", [0.0, 0.5, 0.9])
def test_rows_are_distributions_over_many_specs(sparsity):
    for seed in range(100):
        mdp = make_random_mdp(1 + seed % 9, 1 + seed % 4, seed, sparsity=sparsity)
        assert np.max(np.abs(mdp.transition.sum(axis=2) - 1.0)) <= 1e-12
        assert np.all(mdp.transition >= 0)
        assert np.all(np.abs(mdp.reward) <= 1.0)


def test_geometric_series():
    mdp = MdpSpec([[[1.0]]], [[1.0]], gamma=0.5)
    assert value_iteration(mdp)[0, 0] == pytest.approx(2.0, abs=1e-9)


def test_zero_discount_returns_rewards_exactly():
    mdp = make_random_mdp(5, 3, 1, gamma=0.0)
    np.testing.assert_array_equal(value_iteration(mdp), mdp.reward)


def test_deterministic_chain_matches_hand_recursion():
    # state 0 -> state 1 with reward 0; state 1 absorbing with reward 1
    mdp = MdpSpec([[[0.0, 1.0]], [[0.0, 1.0]]], [[0.0], [1.0]], gamma=0.9)
    np.testing.assert_allclose(value_iteration(mdp, 1e-12)[:, 0], CHAIN_Q_STAR, atol=1e-9)


@pytest.mark.parametrize("gamma", [1.0, 1.5])
def test_gamma_at_least_one_rejected(gamma):
    with pytest.raises(ConfigurationError):
        MdpSpec([[[1.0]]], [[1.0]], gamma=gamma)
    mdp = MdpSpec([[[1.0]]], [[1.0]], gamma=0.5)
    mdp.gamma = gamma
    with pytest.raises(ConfigurationError):
        value_iteration(mdp)


def test_bad_rows_rejected():
    with pytest.raises(ConfigurationError):
        MdpSpec([[[0.5, 0.6]], [[1.0, 0.0]]], [[0.0], [0.0]], gamma=0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 0.95))
def test_value_iteration_contracts(seed, gamma):
    mdp = make_random_mdp(5, 3, seed, gamma=gamma)
    tol = 1e-10
    q, deltas = value_iteration(mdp, tol, return_deltas=True)
    assert deltas[-1] < tol
    assert all(b <= a * gamma + 1e-12 for a, b in zip(deltas, deltas[1:]))
    residual = np.max(np.abs(bellman_backup(mdp, q) - q))
    assert residual < tol / (1 - gamma)


def test_json_round_trip(tmp_path):
    mdp = make_random_mdp(4, 2, 9, sparsity=0.3, gamma=0.8, reward_noise=0.2)
    mdp.save(tmp_path / "m.json")
    back = MdpSpec.load(tmp_path / "m.json")
    assert back.transition.tobytes() == mdp.transition.tobytes()
    assert back.reward.tobytes() == mdp.reward.tobytes()
    assert (back.gamma, back.reward_noise) == (0.8, 0.2)
