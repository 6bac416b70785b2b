"""Small deterministic continuous-control tasks.

Both tasks integrate with semi-implicit Euler at ``dt = 0.05`` and own a
private ``numpy`` generator, so a trajectory is a pure function of the reset
seed and the action sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UsageError


@dataclass
class StepResult:
    next_state: np.ndarray
    reward: float
    done: bool
    truncated: bool = False  # done only because the horizon was reached


def angle_normalize(x: float) -> float:
    return ((x + math.pi) % (2 * math.pi)) - math.pi


class ContinuousEnv:
    name = "base"
    obs_dim = 0
    act_dim = 0
    action_bound = 1.0
    horizon = 1

    def __init__(self):
        self.rng = np.random.default_rng(0)
        self.t = 0

    def reset(self, seed=None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.t = 0
        self._init_state()
        return self.observe()

    def step(self, action) -> StepResult:
        u = np.asarray(action, dtype=np.float64).reshape(-1)
        if u.shape[0] != self.act_dim:
            raise UsageError(f"{self.name} expects a {self.act_dim}-dim action, got {u.shape[0]}")
        if not np.all(np.isfinite(u)):
            raise UsageError(f"non-finite action {u}")
        u = np.clip(u, -self.action_bound, self.action_bound)
        reward = self._advance(u)
        self.t += 1
        terminal = self._terminal()
        truncated = self.t >= self.horizon and not terminal
        return StepResult(self.observe(), float(reward), bool(terminal or truncated), truncated)

    def _terminal(self) -> bool:
        return False

    def _init_state(self) -> None:
        raise NotImplementedError

    def _advance(self, u: np.ndarray) -> float:
        raise NotImplementedError

    def observe(self) -> np.ndarray:
        raise NotImplementedError


class Pendulum(ContinuousEnv):
    """Torque-limited pendulum swing-up.

    ``theta = 0`` is upright. Observation is ``(cos theta, sin theta, theta_dot)``,
    reward is ``-(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)`` with theta wrapped to
    ``[-pi, pi)``. Initial angle is uniform on ``[-pi, pi]``, initial angular
    velocity uniform on ``[-1, 1]``.
    """

    name = "pendulum"
    obs_dim = 3
    act_dim = 1
    action_bound = 2.0
    horizon = 200

    g = 10.0
    m = 1.0
    length = 1.0
    dt = 0.05
    max_speed = 8.0

    def __init__(self):
        super().__init__()
        self.theta = math.pi
        self.theta_dot = 0.0

    def _init_state(self) -> None:
        self.theta = float(self.rng.uniform(-math.pi, math.pi))
        self.theta_dot = float(self.rng.uniform(-1.0, 1.0))

    def set_state(self, theta: float, theta_dot: float) -> np.ndarray:
        self.theta, self.theta_dot = float(theta), float(theta_dot)
        return self.observe()

    def _advance(self, u: np.ndarray) -> float:
        torque = float(u[0])
        th, thdot = self.theta, self.theta_dot
        cost = angle_normalize(th) ** 2 + 0.1 * thdot ** 2 + 0.001 * torque ** 2
        accel = 3.0 * self.g / (2.0 * self.length) * math.sin(th) \
            + 3.0 / (self.m * self.length ** 2) * torque
        thdot = min(max(thdot + accel * self.dt, -self.max_speed), self.max_speed)
        self.theta = th + thdot * self.dt
        self.theta_dot = thdot
        return -cost

    def energy(self) -> float:
        # conserved by the torque-free continuous dynamics
        return 0.5 * self.theta_dot ** 2 + 3.0 * self.g / (2.0 * self.length) * math.cos(self.theta)

    def observe(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta), self.theta_dot])


class PointMassReacher(ContinuousEnv):
    """Planar point mass pushed toward the origin.

    State is ``(x, y, vx, vy)``; action is a force in ``[-1, 1]^2``; reward is the
    negative Euclidean distance to the goal at the origin. Position starts
    uniform in the unit box ``[-1, 1]^2`` at rest and is confined to ``[-2, 2]^2``.
    """

    name = "reacher"
    obs_dim = 4
    act_dim = 2
    action_bound = 1.0
    horizon = 100

    dt = 0.05
    mass = 1.0
    damping = 0.1
    wall = 2.0

    def __init__(self):
        super().__init__()
        self.pos = np.zeros(2)
        self.vel = np.zeros(2)
        self.goal = np.zeros(2)

    def _init_state(self) -> None:
        self.pos = self.rng.uniform(-1.0, 1.0, size=2)
        self.vel = np.zeros(2)

    def set_state(self, pos, vel) -> np.ndarray:
        self.pos = np.asarray(pos, dtype=np.float64).copy()
        self.vel = np.asarray(vel, dtype=np.float64).copy()
        return self.observe()

    def _advance(self, u: np.ndarray) -> float:
        reward = -float(np.linalg.norm(self.pos - self.goal))
        self.vel = self.vel + self.dt * (u / self.mass - self.damping * self.vel)
        pos = self.pos + self.dt * self.vel
        hit = np.abs(pos) > self.wall
        self.vel = np.where(hit, 0.0, self.vel)
        self.pos = np.clip(pos, -self.wall, self.wall)
        return reward

    def observe(self) -> np.ndarray:
        return np.concatenate([self.pos, self.vel])


ENVS = {"pendulum": Pendulum, "reacher": PointMassReacher}


def make_env(name: str) -> ContinuousEnv:
    try:
        return ENVS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown task {name!r}; choose from {sorted(ENVS)}") from None


def env_reset(env: ContinuousEnv, seed) -> np.ndarray:
    return env.reset(seed)


def env_step(env: ContinuousEnv, action) -> StepResult:
    return env.step(action)
