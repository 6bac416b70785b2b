"""Tabular double Q-learning: the classic cross-target scheme and the shared
min-target scheme, under random or simultaneous update patterns.

Q tables are lists of lists so the per-step loop stays in plain Python; use
:attr:`TabularQPair.qa_array` / :attr:`TabularQPair.qb_array` for numpy views.
"""
from __future__ import annotations

import bisect
import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UsageError
from .mdp import MdpSpec, value_iteration

PATTERNS = ("random", "simultaneous")
SELECTORS = ("tddr", "fixed1", "fixed2")
SCHEMES = ("min", "classic")
TRACE_FIELDS = ("step", "deltaBA_inf", "deltaA_inf", "meanAbsEA", "meanAbsEB", "epsilon", "alphaMean")


def _counts(n_states: int, n_actions: int) -> list[list[int]]:
    return [[0] * n_actions for _ in range(n_states)]


@dataclass
class TabularQPair:
    """Two Q tables with visit counts.

    ``visits`` counts how often each pair was sampled; ``updates_a`` and
    ``updates_b`` count how often each table was updated there and drive the
    per-table step sizes.
    """

    qa: list[list[float]]
    qb: list[list[float]]
    visits: list[list[int]]
    updates_a: list[list[int]]
    updates_b: list[list[int]]

    @classmethod
    def zeros(cls, n_states: int, n_actions: int) -> "TabularQPair":
        return cls([[0.0] * n_actions for _ in range(n_states)],
                   [[0.0] * n_actions for _ in range(n_states)],
                   _counts(n_states, n_actions), _counts(n_states, n_actions),
                   _counts(n_states, n_actions))

    @classmethod
    def from_arrays(cls, qa, qb) -> "TabularQPair":
        qa, qb = np.asarray(qa, dtype=np.float64), np.asarray(qb, dtype=np.float64)
        if qa.shape != qb.shape or qa.ndim != 2:
            raise UsageError(f"tables must be equal-shape S x A, got {qa.shape} and {qb.shape}")
        S, A = qa.shape
        return cls(qa.tolist(), qb.tolist(), _counts(S, A), _counts(S, A), _counts(S, A))

    @property
    def qa_array(self) -> np.ndarray:
        return np.array(self.qa)

    @property
    def qb_array(self) -> np.ndarray:
        return np.array(self.qb)


@dataclass
class ConvergenceTrace:
    rows: list[dict] = field(default_factory=list)
    q_star: np.ndarray | None = None
    final: TabularQPair | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_FIELDS)
            for row in self.rows:
                writer.writerow([row["step"]] + [repr(float(row[k])) for k in TRACE_FIELDS[1:]])

    @staticmethod
    def read_csv(path) -> list[dict]:
        with Path(path).open(newline="") as fh:
            return [{k: (int(v) if k == "step" else float(v)) for k, v in row.items()}
                    for row in csv.DictReader(fh)]


def _argmax(row: list[float]) -> int:
    best, value = 0, row[0]
    for k in range(1, len(row)):
        if row[k] > value:
            best, value = k, row[k]
    return best


def learning_rate(n: int, omega: float = 0.8) -> float:
    """Polynomial step size ``n ** -omega`` for the ``n``-th visit of a pair."""
    if not 0.5 < omega <= 1.0:
        raise ConfigurationError(f"omega must lie in (0.5, 1], got {omega}")
    if n < 1:
        raise UsageError(f"visit count must be >= 1, got {n}")
    return n ** -omega


def shared_target(pair: TabularQPair, gamma: float, r: float, s_next: int, i: int) -> float:
    """``r + gamma * min(Q^B(s', a*_i), Q^A(s', a*_i))`` with ``a*_1 = argmax Q^A(s', .)``
    and ``a*_2 = argmax Q^B(s', .)``."""
    a_star = _argmax(pair.qa[s_next]) if i == 1 else _argmax(pair.qb[s_next])
    return r + gamma * min(pair.qb[s_next][a_star], pair.qa[s_next][a_star])


def tddr_tabular_selector(pair: TabularQPair, mdp: MdpSpec, transition) -> int:
    """1 iff ``|delta_1| <= |delta_2|``, where each delta uses the shared min target."""
    s, a, r, s_next = transition
    current = min(pair.qb[s][a], pair.qa[s][a])
    d1 = shared_target(pair, mdp.gamma, r, s_next, 1) - current
    d2 = shared_target(pair, mdp.gamma, r, s_next, 2) - current
    return 1 if abs(d1) <= abs(d2) else 2


def _split_alpha(alpha) -> tuple[float, float]:
    if isinstance(alpha, tuple):
        return alpha
    return alpha, alpha


def _pick_tables(which, rng) -> str:
    if which is None:
        if rng is None:
            raise UsageError("need either `which` or an rng to pick the table to update")
        which = "A" if rng.random() < 0.5 else "B"
    if which not in ("A", "B", "both"):
        raise UsageError(f"unknown table choice {which!r}")
    return which


def classic_double_q_step(pair: TabularQPair, mdp: MdpSpec, transition, alpha,
                          which: str | None = None, rng=None) -> tuple[float, float]:
    """Cross-target double Q-learning update of one table.

    ``alpha`` is one step size or an ``(alpha_A, alpha_B)`` tuple. Returns the
    TD errors ``(E^A, E^B)`` of both tables against their own cross targets,
    before the update.
    """
    alpha_a, alpha_b = _split_alpha(alpha)
    s, a, r, s_next = transition
    g = mdp.gamma
    qa, qb = pair.qa, pair.qb
    e_a = r + g * qb[s_next][_argmax(qa[s_next])] - qa[s][a]
    e_b = r + g * qa[s_next][_argmax(qb[s_next])] - qb[s][a]
    which = _pick_tables(which, rng)
    if which in ("A", "both"):
        qa[s][a] = qa[s][a] + alpha_a * e_a
    if which in ("B", "both"):
        qb[s][a] = qb[s][a] + alpha_b * e_b
    return e_a, e_b


def min_double_q_step(pair: TabularQPair, mdp: MdpSpec, transition, alpha,
                      pattern: str = "random", selector: str = "tddr",
                      which: str | None = None, rng=None) -> tuple[float, float]:
    """Shared min-target update. Both tables regress onto the same target.

    ``pattern="simultaneous"`` updates both tables; ``"random"`` updates one,
    chosen by ``which`` or a fair coin from ``rng``. ``alpha`` is one step size
    or an ``(alpha_A, alpha_B)`` tuple. Returns ``(E^A, E^B)``.
    """
    if pattern not in PATTERNS:
        raise ConfigurationError(f"unknown update pattern {pattern!r}")
    alpha_a, alpha_b = _split_alpha(alpha)
    s, a, r, s_next = transition
    i = select_index(pair, mdp, transition, selector)
    target = shared_target(pair, mdp.gamma, r, s_next, i)
    qa, qb = pair.qa, pair.qb
    e_a = target - qa[s][a]
    e_b = target - qb[s][a]
    which = "both" if pattern == "simultaneous" else _pick_tables(which, rng)
    if which in ("A", "both"):
        qa[s][a] = qa[s][a] + alpha_a * e_a
    if which in ("B", "both"):
        qb[s][a] = qb[s][a] + alpha_b * e_b
    return e_a, e_b


def select_index(pair: TabularQPair, mdp: MdpSpec, transition, selector: str) -> int:
    if selector == "tddr":
        return tddr_tabular_selector(pair, mdp, transition)
    if selector == "fixed1":
        return 1
    if selector == "fixed2":
        return 2
    raise ConfigurationError(f"unknown selector {selector!r}")


def _uniform_stream(rng: np.random.Generator, chunk: int = 1 << 16):
    while True:
        yield from rng.random(chunk).tolist()


def epsilon_schedule(step: int, total: int, start: float = 1.0, floor: float = 0.1,
                     anneal_fraction: float = 0.5) -> float:
    """Linear decay from ``start`` to ``floor`` over the first ``anneal_fraction`` of the run."""
    horizon = max(1, int(total * anneal_fraction))
    if step >= horizon:
        return floor
    return start + (floor - start) * step / horizon


def run_convergence(mdp: MdpSpec, pattern: str = "random", selector: str = "tddr",
                    steps: int = 500_000, seed: int = 0, checkpoint_every: int = 1000,
                    omega: float = 0.8, scheme: str = "min", eps_start: float = 1.0,
                    eps_floor: float = 0.1, anneal_fraction: float = 0.5,
                    initial: TabularQPair | None = None, q_star: np.ndarray | None = None,
                    vi_tol: float = 1e-10) -> ConvergenceTrace:
    """Simulate tabular double Q-learning on ``mdp`` along one epsilon-greedy trajectory.

    The behavior policy is epsilon-greedy on ``min(Q^A, Q^B)``. Step sizes are
    ``n(s, a) ** -omega`` per visited pair. Every ``checkpoint_every`` steps the
    sup-norm gaps ``|Q^A - Q^B|`` and ``|Q^A - Q*|`` are recorded together with
    the mean absolute TD errors, epsilon and mean step size since the last row.
    Each table's step size follows its own update count at the visited pair.
    """
    if pattern not in PATTERNS:
        raise ConfigurationError(f"unknown update pattern {pattern!r}")
    if selector not in SELECTORS:
        raise ConfigurationError(f"unknown selector {selector!r}")
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    if checkpoint_every < 1 or steps < 0:
        raise ConfigurationError("steps must be >= 0 and checkpoint_every >= 1")
    if not 0.0 < eps_floor <= eps_start <= 1.0:
        raise ConfigurationError("need 0 < eps_floor <= eps_start <= 1 for infinite visitation")
    learning_rate(1, omega)

    S, A = mdp.n_states, mdp.n_actions
    if q_star is None:
        q_star = value_iteration(mdp, vi_tol)
    pair = initial if initial is not None else TabularQPair.zeros(S, A)
    cdf = [[list(itertools.accumulate(mdp.transition[s, a].tolist())) for a in range(A)]
           for s in range(S)]
    R = mdp.reward.tolist()
    noise = mdp.reward_noise
    rng = np.random.default_rng(seed)
    u = _uniform_stream(rng)

    qa, qb, visits = pair.qa, pair.qb, pair.visits
    n_a, n_b = pair.updates_a, pair.updates_b
    trace = ConvergenceTrace(q_star=q_star)
    s = int(next(u) * S)
    sum_ea = sum_eb = sum_alpha = 0.0
    count = 0
    simultaneous = pattern == "simultaneous"
    for t in range(steps):
        eps = epsilon_schedule(t, steps, eps_start, eps_floor, anneal_fraction)
        if next(u) < eps:
            a = min(int(next(u) * A), A - 1)
        else:
            row_a, row_b = qa[s], qb[s]
            a = _argmax([x if x < y else y for x, y in zip(row_a, row_b)])
        r = R[s][a]
        if noise:
            r += noise * (next(u) - 0.5)
        row = cdf[s][a]
        s_next = min(bisect.bisect_right(row, next(u) * row[-1]), S - 1)
        visits[s][a] += 1
        which = "both" if simultaneous else ("A" if next(u) < 0.5 else "B")
        alpha_a = alpha_b = 0.0
        if which != "B":
            n_a[s][a] += 1
            alpha_a = n_a[s][a] ** -omega
        if which != "A":
            n_b[s][a] += 1
            alpha_b = n_b[s][a] ** -omega
        transition = (s, a, r, s_next)
        if scheme == "min":
            e_a, e_b = min_double_q_step(pair, mdp, transition, (alpha_a, alpha_b),
                                         pattern, selector, which)
        else:
            e_a, e_b = classic_double_q_step(pair, mdp, transition, (alpha_a, alpha_b), which)
        sum_ea += abs(e_a)
        sum_eb += abs(e_b)
        sum_alpha += alpha_a if which == "A" else alpha_b
        count += 1
        s = s_next
        if (t + 1) % checkpoint_every == 0 or t + 1 == steps:
            QA, QB = np.array(qa), np.array(qb)
            trace.rows.append({
                "step": t + 1,
                "deltaBA_inf": float(np.max(np.abs(QB - QA))),
                "deltaA_inf": float(np.max(np.abs(QA - q_star))),
                "meanAbsEA": sum_ea / count,
                "meanAbsEB": sum_eb / count,
                "epsilon": eps,
                "alphaMean": sum_alpha / count,
            })
            sum_ea = sum_eb = sum_alpha = 0.0
            count = 0
    trace.final = pair
    return trace
