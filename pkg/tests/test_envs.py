import math

import numpy as np
import pytest

from tddr.envs import Pendulum, PointMassReacher, env_reset, env_step, make_env
from tddr.errors import ConfigurationError, UsageError

# frozen from tests/oracles/forward_oracles.py (one Euler tick from theta=0.1 at rest)
EULER_THETA = 0.10374375312425606
EULER_THETA_DOT = 0.07487506248512112


def test_pendulum_reset_is_seeded():
    a, b = Pendulum(), Pendulum()
    np.testing.assert_array_equal(env_reset(a, 0), env_reset(b, 0))
    assert not np.array_equal(env_reset(a, 0), env_reset(a, 1))


@pytest.mark.parametrize("seed", range(50))
def test_pendulum_initial_ranges(seed):
    env = Pendulum()
    env.reset(seed)
    assert -math.pi <= env.theta <= math.pi
    assert -1.0 <= env.theta_dot <= 1.0


@pytest.mark.parametrize("seed", range(50))
def test_reacher_starts_inside_unit_box_at_rest(seed):
    obs = PointMassReacher().reset(seed)
    assert np.all(np.abs(obs[:2]) <= 1.0)
    np.testing.assert_array_equal(obs[2:], [0.0, 0.0])


def test_hanging_pendulum_stays_put():
    env = Pendulum()
    before = env.set_state(math.pi, 0.0)
    after = env_step(env, [0.0]).next_state
    assert np.max(np.abs(after - before)) < 1e-9


def test_upright_drift_matches_euler_oracle():
    env = Pendulum()
    env.set_state(0.1, 0.0)
    env.step([0.0])
    assert env.theta == pytest.approx(EULER_THETA, abs=1e-15)
    assert env.theta_dot == pytest.approx(EULER_THETA_DOT, abs=1e-15)


def test_reacher_at_goal_earns_zero():
    env = PointMassReacher()
    env.set_state([0.0, 0.0], [0.0, 0.0])
    assert env.step([0.0, 0.0]).reward == 0.0


def test_actions_are_clamped():
    a, b = Pendulum(), Pendulum()
    a.set_state(0.5, 0.0)
    b.set_state(0.5, 0.0)
    np.testing.assert_array_equal(a.step([100.0]).next_state, b.step([2.0]).next_state)


def test_nan_action_is_usage_error():
    env = Pendulum()
    env.reset(0)
    with pytest.raises(UsageError):
        env.step([float("nan")])


def test_wrong_action_dim_is_usage_error():
    env = PointMassReacher()
    env.reset(0)
    with pytest.raises(UsageError):
        env.step([0.0])


def test_unknown_task():
    with pytest.raises(ConfigurationError):
        make_env("hopper")


@pytest.mark.parametrize("name", ["pendulum", "reacher"])
def test_done_exactly_at_horizon(name):
    env = make_env(name)
    env.reset(3)
    flags = [env.step(np.zeros(env.act_dim)) for _ in range(env.horizon)]
    assert not any(r.done for r in flags[:-1])
    assert flags[-1].done and flags[-1].truncated


@pytest.mark.parametrize("name", ["pendulum", "reacher"])
def test_trajectories_replay_exactly(name):
    def rollout():
        env = make_env(name)
        env.reset(11)
        rng = np.random.default_rng(5)
        out = []
        for _ in range(env.horizon):
            res = env.step(rng.uniform(-env.action_bound, env.action_bound, env.act_dim))
            assert np.all(np.isfinite(res.next_state)) and math.isfinite(res.reward)
            out.append((res.next_state.tobytes(), res.reward))
        return out

    assert rollout() == rollout()


def test_pendulum_energy_drift_per_tick_is_bounded():
    # semi-implicit Euler: per-tick energy error is O(dt^2) in the torque-free system
    env = Pendulum()
    rng = np.random.default_rng(0)
    for _ in range(2000):
        theta, theta_dot = rng.uniform(-math.pi, math.pi), rng.uniform(-6, 6)
        env.set_state(theta, theta_dot)
        e0 = env.energy()
        env.step([0.0])
        assert abs(env.energy() - e0) <= env.dt ** 2 * (15.0 ** 2 + 15.0 * theta_dot ** 2)


def test_pendulum_reward_components():
    env = Pendulum()
    env.set_state(0.5, 1.0)
    r = env.step([2.0]).reward
    assert r == pytest.approx(-(0.25 + 0.1 + 0.004), abs=1e-15)
