from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    d: bool


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray  # (n, 1)
    s_next: np.ndarray
    d: np.ndarray  # (n, 1), 1.0 where the episode terminated

    def __len__(self) -> int:
        return self.s.shape[0]


class ReplayBuffer:
    """Fixed-capacity FIFO ring buffer with uniform sampling with replacement."""

    def __init__(self, obs_dim: int, act_dim: int, capacity: int = 100_000):
        if capacity < 1:
            raise UsageError("replay capacity must be positive")
        self.obs_dim, self.act_dim, self.capacity = obs_dim, act_dim, capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, act_dim))
        self.r = np.zeros((capacity, 1))
        self.s_next = np.zeros((capacity, obs_dim))
        self.d = np.zeros((capacity, 1))
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        s, a, s_next = (np.asarray(x, dtype=np.float64).reshape(-1) for x in (t.s, t.a, t.s_next))
        if s.shape[0] != self.obs_dim or s_next.shape[0] != self.obs_dim or a.shape[0] != self.act_dim:
            raise UsageError(
                f"transition dims (s={s.shape[0]}, a={a.shape[0]}, s'={s_next.shape[0]}) "
                f"do not match buffer (obs={self.obs_dim}, act={self.act_dim})")
        if not np.isfinite(t.r):
            raise UsageError(f"non-finite reward {t.r}")
        i = self.cursor
        self.s[i], self.a[i], self.r[i, 0], self.s_next[i], self.d[i, 0] = s, a, t.r, s_next, float(t.d)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def __getitem__(self, k: int) -> Transition:
        """The ``k``-th oldest stored transition."""
        if not 0 <= k < self.size:
            raise IndexError(k)
        i = (self.cursor - self.size + k) % self.capacity
        return Transition(self.s[i].copy(), self.a[i].copy(), float(self.r[i, 0]),
                          self.s_next[i].copy(), bool(self.d[i, 0]))

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise UsageError("cannot sample from an empty replay buffer")
        return rng.integers(0, self.size, size=n)

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        idx = self.sample_indices(n, rng)
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s_next[idx], self.d[idx])
