"""Double actor-critic agent covering DDPG, TD3, DARC, MinDA and TDDR.

Pairs are numbered 1 and 2 in the public API: actor ``i`` is trained against
critic ``i`` only. DDPG has one critic and one actor, TD3 two critics and one
actor; the double-actor kinds have two of each.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UsageError
from .nn import Adam, Mlp
from .regularizers import (RegularizerKind, TargetInputs, compute_target,
                           darc_coupling_penalty)
from .replay import Batch
from .tensor import Tensor, concat


@dataclass
class NoiseConfig:
    explore: float = 0.1  # std of behavior noise, absolute action units
    sigma: float = 0.2  # std of target smoothing noise
    clip: float = 0.5  # smoothing noise is clipped to [-clip, clip]

    def __post_init__(self):
        if self.explore < 0 or self.sigma < 0:
            raise ConfigurationError("noise standard deviations must be non-negative")
        if self.clip <= 0:
            raise ConfigurationError("noise clip must be positive")


class UpdateSchedule:
    """Which (critic, actor) pairs train on a given step.

    ``cross`` alternates 1, 2, 1, 2, ...; ``joint`` trains both every step.
    """

    def __init__(self, mode: str = "cross"):
        if mode not in ("cross", "joint"):
            raise ConfigurationError(f"unknown update mode {mode!r}")
        self.mode = mode
        self.parity = 0

    def advance(self) -> tuple[int, ...]:
        if self.mode == "joint":
            return (1, 2)
        pair = self.parity + 1
        self.parity ^= 1
        return (pair,)


def advance_schedule(sched: UpdateSchedule) -> tuple[int, ...]:
    return sched.advance()


def soft_update(target: Mlp, online: Mlp, tau: float) -> None:
    """In place: ``target <- tau * online + (1 - tau) * target``."""
    if not 0.0 <= tau <= 1.0:
        raise ConfigurationError(f"tau must lie in [0, 1], got {tau}")
    for t, o in zip(target.parameters(), online.parameters()):
        if t.shape != o.shape:
            raise UsageError(f"soft update shape mismatch {t.shape} vs {o.shape}")
        t.data = tau * o.data + (1.0 - tau) * t.data


@dataclass
class AgentConfig:
    obs_dim: int
    act_dim: int
    action_bound: float = 1.0
    kind: RegularizerKind = field(default_factory=lambda: RegularizerKind("tddr"))
    hidden: tuple[int, ...] = (256, 256)
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    mode: str = "cross"
    policy_delay: int = 1
    actor_final_scale: float = 1e-2

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.policy_delay < 1:
            raise ConfigurationError("policy_delay must be at least 1")


class Agent:
    """Online and target networks plus one Adam optimizer per online network."""

    def __init__(self, config: AgentConfig, rng: np.random.Generator):
        self.config = config
        self.kind = config.kind
        c = config
        actor_widths = [c.obs_dim, *c.hidden, c.act_dim]
        critic_widths = [c.obs_dim + c.act_dim, *c.hidden, 1]
        self.actors = [Mlp(actor_widths, rng, output="tanh", bound=c.action_bound,
                           final_scale=c.actor_final_scale) for _ in range(self.kind.n_actors)]
        self.critics = [Mlp(critic_widths, rng) for _ in range(self.kind.n_critics)]
        self.target_actors = [a.clone() for a in self.actors]
        self.target_critics = [q.clone() for q in self.critics]
        self.actor_opts = [Adam(a.parameters(), lr=c.actor_lr) for a in self.actors]
        self.critic_opts = [Adam(q.parameters(), lr=c.critic_lr) for q in self.critics]
        self.schedule = UpdateSchedule(c.mode)
        self.updates = 0

    # acting

    def action_scores(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Candidate actions ``pi_j(s)`` and scores ``Q_i(s, pi_j(s))`` as ``[i, j]``."""
        s = np.asarray(s, dtype=np.float64).reshape(1, -1)
        cands = [actor.predict(s) for actor in self.actors]
        scores = np.array([[critic.predict(np.hstack([s, a]))[0, 0] for a in cands]
                           for critic in self.critics])
        return np.vstack(cands), scores

    def greedy_action(self, s, single_actor: bool = False) -> np.ndarray:
        if single_actor or len(self.actors) == 1:
            return self.actors[0].predict(np.asarray(s).reshape(1, -1))[0]
        cands, scores = self.action_scores(s)
        _, j = np.unravel_index(np.argmax(scores), scores.shape)
        return cands[j]

    def select_action(self, s, rng: np.random.Generator | None, explore: float | None = None,
                      single_actor: bool = False) -> np.ndarray:
        """Best of the ``max_i max_j`` candidates, plus Gaussian noise, clamped."""
        a = self.greedy_action(s, single_actor)
        sigma = self.config.noise.explore if explore is None else explore
        if sigma > 0:
            a = a + rng.normal(0.0, sigma, size=a.shape)
        return np.clip(a, -self.config.action_bound, self.config.action_bound)

    def smoothing_noise(self, shape, rng: np.random.Generator) -> np.ndarray:
        n = self.config.noise
        if n.sigma == 0:
            return np.zeros(shape)
        return np.clip(rng.normal(0.0, n.sigma, size=shape), -n.clip, n.clip)

    def target_action(self, i: int, s_next, rng: np.random.Generator) -> np.ndarray:
        if i not in (1, 2) or i > len(self.target_actors):
            raise UsageError(f"no target actor {i}")
        base = self.target_actors[i - 1].predict(s_next)
        a = base + self.smoothing_noise(base.shape, rng)
        return np.clip(a, -self.config.action_bound, self.config.action_bound)

    # learning

    def target_inputs(self, batch: Batch, rng: np.random.Generator) -> TargetInputs:
        next_actions = [self.target_action(j, batch.s_next, rng)
                        for j in range(1, len(self.target_actors) + 1)]
        return TargetInputs(batch.r, batch.s, batch.a, batch.s_next, batch.d, self.config.gamma,
                            self.target_critics, next_actions)

    def td_target(self, batch: Batch, rng: np.random.Generator) -> np.ndarray:
        return compute_target(self.kind, self.target_inputs(batch, rng))

    def critic_step(self, i: int, batch: Batch, y: np.ndarray) -> float:
        critic, opt = self.critics[i - 1], self.critic_opts[i - 1]
        sa = np.hstack([batch.s, batch.a])
        critic.zero_grad()
        q = critic(sa)
        loss = (q - np.asarray(y).reshape(-1, 1)).square().mean()
        if self.kind.tag == "darc" and self.kind.lam > 0:
            other = self.critics[2 - i].predict(sa)
            loss = loss + darc_coupling_penalty(q, other, self.kind.lam)
        loss.backward()
        opt.step()
        return loss.item()

    def actor_objective(self, i: int, s) -> Tensor:
        """``-mean_s Q_i(s, pi_i(s))``; gradients reach actor ``i`` only."""
        s = np.asarray(s, dtype=np.float64)
        pa = self.actors[i - 1](s)
        q = self.critics[i - 1].forward(concat([Tensor(s), pa]), frozen=True)
        return -q.mean()

    def actor_step(self, i: int, batch: Batch) -> float:
        actor, opt = self.actors[i - 1], self.actor_opts[i - 1]
        actor.zero_grad()
        loss = self.actor_objective(i, batch.s)
        loss.backward()
        opt.step()
        return loss.item()

    def soft_update_pair(self, critic_ids, actor_ids) -> None:
        tau = self.config.tau
        for i in critic_ids:
            soft_update(self.target_critics[i - 1], self.critics[i - 1], tau)
        for j in actor_ids:
            soft_update(self.target_actors[j - 1], self.actors[j - 1], tau)

    def train_step(self, sample, rng: np.random.Generator) -> dict:
        """One training step. ``sample()`` returns a fresh minibatch each call.

        Returns per-update losses for diagnostics.
        """
        self.updates += 1
        do_actor = self.updates % self.config.policy_delay == 0
        losses: dict[str, float] = {}
        if self.kind.n_actors == 1:
            batch = sample()
            y = self.td_target(batch, rng)
            critic_ids = tuple(range(1, self.kind.n_critics + 1))
            for i in critic_ids:
                losses[f"critic{i}"] = self.critic_step(i, batch, y)
            if do_actor:
                losses["actor1"] = self.actor_step(1, batch)
                self.soft_update_pair(critic_ids, (1,))
            return losses
        for i in self.schedule.advance():
            batch = sample()
            y = self.td_target(batch, rng)
            losses[f"critic{i}"] = self.critic_step(i, batch, y)
            if do_actor:
                losses[f"actor{i}"] = self.actor_step(i, batch)
                self.soft_update_pair((i,), (i,))
        return losses

    # persistence

    def named_networks(self) -> dict[str, Mlp]:
        nets = {}
        for k, net in enumerate(self.actors, 1):
            nets[f"actor{k}"] = net
            nets[f"target_actor{k}"] = self.target_actors[k - 1]
        for k, net in enumerate(self.critics, 1):
            nets[f"critic{k}"] = net
            nets[f"target_critic{k}"] = self.target_critics[k - 1]
        return nets

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {f"{name}.{pname}": p.data
                for name, net in self.named_networks().items()
                for pname, p in net.named_parameters()}

    def save(self, path) -> None:
        with open(Path(path), "wb") as fh:
            np.savez(fh, **self.state_arrays())

    def load(self, path) -> None:
        with np.load(Path(path)) as data:
            arrays = self.state_arrays()
            if set(data.files) != set(arrays):
                raise UsageError(f"checkpoint {path} does not match this agent's networks")
            for name, net in self.named_networks().items():
                for pname, p in net.named_parameters():
                    value = data[f"{name}.{pname}"]
                    if value.shape != p.shape:
                        raise UsageError(f"checkpoint tensor {name}.{pname} has shape {value.shape}")
                    p.data = value.astype(np.float64).copy()


def select_behavior_action(s, agent: Agent, noise: NoiseConfig, rng) -> np.ndarray:
    return agent.select_action(s, rng, explore=noise.explore)


def target_action(i: int, s_next, agent: Agent, rng) -> np.ndarray:
    return agent.target_action(i, s_next, rng)


def actor_step(i: int, batch: Batch, agent: Agent) -> float:
    return agent.actor_step(i, batch)
