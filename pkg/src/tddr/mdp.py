"""Finite MDPs: random generation, exact value iteration and JSON round-trip."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError


@dataclass
class MdpSpec:
    transition: np.ndarray  # P[s, a, s']
    reward: np.ndarray  # mean R[s, a]
    gamma: float
    reward_noise: float = 0.0  # width of uniform noise added to each sampled reward

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.reward = np.asarray(self.reward, dtype=np.float64)
        self.validate()

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def validate(self) -> None:
        P, R = self.transition, self.reward
        if P.ndim != 3 or P.shape[0] != P.shape[2] or P.shape[0] < 1 or P.shape[1] < 1:
            raise ConfigurationError(f"transition table must be S x A x S, got {P.shape}")
        if R.shape != P.shape[:2]:
            raise ConfigurationError(f"reward table shape {R.shape} != {P.shape[:2]}")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > 1e-12:
            raise ConfigurationError("transition rows must be probability distributions")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not np.all(np.isfinite(R)) or not np.isfinite(self.reward_noise) or self.reward_noise < 0:
            raise ConfigurationError("rewards and noise width must be finite")

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "gamma": self.gamma,
            "reward_noise": self.reward_noise,
            "transition": self.transition.ravel().tolist(),
            "reward": self.reward.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MdpSpec":
        S, A = int(d["n_states"]), int(d["n_actions"])
        return cls(np.array(d["transition"]).reshape(S, A, S),
                   np.array(d["reward"]).reshape(S, A),
                   float(d["gamma"]), float(d.get("reward_noise", 0.0)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "MdpSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def make_random_mdp(n_states: int, n_actions: int, seed: int, sparsity: float = 0.0,
                    gamma: float = 0.9, reward_noise: float = 0.0) -> MdpSpec:
    """Random MDP with rewards in ``[-1, 1]``.

    ``sparsity`` is the probability that a transition entry is zeroed; every row
    keeps at least one reachable successor.
    """
    if n_states < 1 or n_actions < 1:
        raise ConfigurationError("need at least one state and one action")
    if not 0.0 <= sparsity < 1.0:
        raise ConfigurationError(f"sparsity must lie in [0, 1), got {sparsity}")
    rng = np.random.default_rng(seed)
    P = rng.uniform(size=(n_states, n_actions, n_states))
    if sparsity > 0:
        P *= rng.uniform(size=P.shape) >= sparsity
        keep = rng.integers(n_states, size=(n_states, n_actions))
        empty = P.sum(axis=2) == 0
        P[empty, keep[empty]] = 1.0
    P /= P.sum(axis=2, keepdims=True)
    # renormalizing once can leave ~1e-16 drift; push it into the largest entry
    drift = 1.0 - P.sum(axis=2)
    idx = P.argmax(axis=2)
    ii, jj = np.indices(idx.shape)
    P[ii, jj, idx] += drift
    R = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return MdpSpec(P, R, gamma, reward_noise)


def bellman_backup(mdp: MdpSpec, Q: np.ndarray) -> np.ndarray:
    return mdp.reward + mdp.gamma * mdp.transition @ Q.max(axis=1)


def value_iteration(mdp: MdpSpec, tol: float = 1e-10, max_iter: int = 1_000_000,
                    return_deltas: bool = False):
    """Optimal action values by repeated Bellman optimality backups.

    Stops once successive iterates differ by less than ``tol`` in sup norm.
    """
    if not 0.0 <= mdp.gamma < 1.0:
        raise ConfigurationError(f"value iteration needs gamma < 1, got {mdp.gamma}")
    Q = np.zeros_like(mdp.reward)
    deltas = []
    for _ in range(max_iter):
        Q_next = bellman_backup(mdp, Q)
        delta = float(np.max(np.abs(Q_next - Q)))
        deltas.append(delta)
        Q = Q_next
        if delta < tol:
            break
    return (Q, deltas) if return_deltas else Q
