"""Bootstrap values (psi) and TD targets for DDPG, TD3, DARC, MinDA and TDDR.

Throughout, ``q_next`` has shape ``(N, n_critics, n_actors)`` with
``q_next[:, i, j] = Q'_i(s', a'_j)`` evaluated by the *target* critics, and
``q_now`` has shape ``(N, n_critics)`` with ``q_now[:, i] = Q'_i(s, a)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError
from .nn import Mlp
from .tensor import Tensor, as_tensor

KINDS = ("ddpg", "td3", "darc", "minda", "tddr")


@dataclass(frozen=True)
class RegularizerKind:
    tag: str
    nu: float | None = None
    lam: float | None = None
    compare: str = "sample"  # TDDR only: "sample" or "batch_mean"
    # SD3/GD3 settings kept for provenance; the min form below never reads them
    nns: int | None = None
    beta: float | None = None
    bias: float | None = None

    def __post_init__(self):
        if self.tag not in KINDS:
            raise ConfigurationError(f"unknown regularizer {self.tag!r}; choose from {KINDS}")
        if self.tag == "darc":
            if self.nu is None or self.lam is None:
                raise ConfigurationError("darc needs both nu and lam")
            if not 0.0 <= self.nu <= 1.0:
                raise ConfigurationError(f"nu must lie in [0, 1], got {self.nu}")
            if self.lam < 0:
                raise ConfigurationError(f"lam must be non-negative, got {self.lam}")
        elif self.nu is not None or self.lam is not None:
            raise ConfigurationError(f"nu/lam only apply to darc, not {self.tag}")
        if self.compare not in ("sample", "batch_mean"):
            raise ConfigurationError(f"unknown TD-error comparison mode {self.compare!r}")

    @classmethod
    def make(cls, tag: str, nu: float = 0.1, lam: float = 0.005, **kw) -> "RegularizerKind":
        tag = tag.lower()
        if tag == "darc":
            return cls(tag, nu=nu, lam=lam, **kw)
        return cls(tag, **kw)

    @property
    def n_actors(self) -> int:
        return 1 if self.tag in ("ddpg", "td3") else 2

    @property
    def n_critics(self) -> int:
        return 1 if self.tag == "ddpg" else 2

    @property
    def uses_deltas(self) -> bool:
        return self.tag == "tddr"


@dataclass
class TddrDeltas:
    delta1: np.ndarray
    delta2: np.ndarray


@dataclass
class TargetInputs:
    """One minibatch plus the target networks needed to bootstrap it.

    ``next_actions[j]`` is the smoothed target action ``a'_j`` for ``s_next``.
    """

    r: np.ndarray
    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    d: np.ndarray
    gamma: float
    target_critics: list[Mlp]
    next_actions: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1), got {self.gamma}")
        self.r = np.asarray(self.r, dtype=np.float64).reshape(-1)
        self.d = np.asarray(self.d, dtype=np.float64).reshape(-1)

    @cached_property
    def q_next(self) -> np.ndarray:
        cols = [[critic.predict(np.hstack([self.s_next, a_j]))[:, 0] for a_j in self.next_actions]
                for critic in self.target_critics]
        return np.asarray(cols).transpose(2, 0, 1)

    @cached_property
    def q_now(self) -> np.ndarray:
        sa = np.hstack([self.s, self.a])
        return np.stack([critic.predict(sa)[:, 0] for critic in self.target_critics], axis=1)


def _q(x) -> np.ndarray:
    return x.q_next if isinstance(x, TargetInputs) else np.asarray(x, dtype=np.float64)


def candidate_values(q_next) -> np.ndarray:
    """``min_i Q'_i(s', a'_j)`` for every actor ``j``; shape ``(N, n_actors)``."""
    return _q(q_next).min(axis=1)


def psi_ddpg(q_next) -> np.ndarray:
    return _q(q_next)[:, 0, 0]


def psi_td3(q_next) -> np.ndarray:
    return _q(q_next)[:, :, 0].min(axis=1)


def psi_darc(q_next, nu: float) -> np.ndarray:
    if not 0.0 <= nu <= 1.0:
        raise ConfigurationError(f"nu must lie in [0, 1], got {nu}")
    cand = candidate_values(q_next)
    hi, lo = cand.max(axis=1), cand.min(axis=1)
    # same convex combination, arranged so rounding cannot leave [lo, hi]
    return np.minimum(lo + (1.0 - nu) * (hi - lo), hi)


def psi_min_da(q_next) -> np.ndarray:
    return candidate_values(q_next).min(axis=1)


def tddr_deltas(r, gamma: float, d, q_next, q_now) -> TddrDeltas:
    """TD errors of the target critics for each target actor.

    Both terms come from target networks only; the bootstrap is masked by ``1 - d``.
    """
    r = np.asarray(r, dtype=np.float64).reshape(-1)
    mask = 1.0 - np.asarray(d, dtype=np.float64).reshape(-1)
    cand = candidate_values(q_next)
    current = np.asarray(q_now, dtype=np.float64).min(axis=1)
    boot = r + gamma * mask * cand.T - current
    return TddrDeltas(boot[0], boot[1])


def tddr_choose_first(deltas: TddrDeltas, compare: str = "sample") -> np.ndarray:
    if compare == "batch_mean":
        first = np.mean(np.abs(deltas.delta1)) <= np.mean(np.abs(deltas.delta2))
        return np.full(deltas.delta1.shape, first)
    return np.abs(deltas.delta1) <= np.abs(deltas.delta2)


def psi_tddr(q_next, deltas: TddrDeltas, compare: str = "sample") -> np.ndarray:
    cand = candidate_values(q_next)
    return np.where(tddr_choose_first(deltas, compare), cand[:, 0], cand[:, 1])


def td_target(r, psi, gamma: float, d) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64).reshape(-1)
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    return r + gamma * (1.0 - d) * np.asarray(psi, dtype=np.float64).reshape(-1)


def compute_psi(kind: RegularizerKind, inputs: TargetInputs) -> np.ndarray:
    if kind.tag == "ddpg":
        return psi_ddpg(inputs)
    if kind.tag == "td3":
        return psi_td3(inputs)
    if kind.tag == "darc":
        return psi_darc(inputs, kind.nu)
    if kind.tag == "minda":
        return psi_min_da(inputs)
    deltas = tddr_deltas(inputs.r, inputs.gamma, inputs.d, inputs.q_next, inputs.q_now)
    return psi_tddr(inputs, deltas, kind.compare)


def compute_target(kind: RegularizerKind, inputs: TargetInputs) -> np.ndarray:
    """The shared TD target ``y = r + gamma (1 - d) psi`` for every critic."""
    return td_target(inputs.r, compute_psi(kind, inputs), inputs.gamma, inputs.d)


def critic_loss(critic: Mlp, s, a, y) -> Tensor:
    """Mean squared TD error; ``y`` enters as a constant."""
    q = critic(np.hstack([s, a]))
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    return (q - y).square().mean()


def darc_coupling_penalty(q_self, q_other, lam: float) -> Tensor:
    """``lam * mean((Q_1 - Q_2)^2)`` on the current batch."""
    if lam < 0:
        raise ConfigurationError(f"lam must be non-negative, got {lam}")
    return ((as_tensor(q_self) - as_tensor(q_other)).square().mean()) * lam
