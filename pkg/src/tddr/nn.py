"""Multilayer perceptrons and the Adam optimizer on top of :mod:`tddr.tensor`."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UsageError
from .tensor import Tensor, as_tensor


class Mlp:
    """Fully connected network with ReLU hidden layers.

    ``output`` is ``"identity"`` for critics or ``"tanh"`` for actors, in which
    case the squashed output is multiplied by ``bound``.
    """

    def __init__(self, widths, rng: np.random.Generator | None = None,
                 output: str = "identity", bound: float = 1.0,
                 final_scale: float = 1.0, hidden: str = "relu"):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or any(w <= 0 for w in widths):
            raise ConfigurationError(f"invalid layer widths {widths}")
        if output not in ("identity", "tanh"):
            raise ConfigurationError(f"unknown output activation {output!r}")
        if hidden not in ("relu", "identity"):
            raise ConfigurationError(f"unknown hidden activation {hidden!r}")
        self.widths = widths
        self.output = output
        self.hidden = hidden
        self.bound = float(bound)
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        rng = rng if rng is not None else np.random.default_rng(0)
        n_layers = len(widths) - 1
        for k, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            limit = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            b = rng.uniform(-limit, limit, size=(1, fan_out))
            if k == n_layers - 1:
                w *= final_scale
                b *= final_scale
            self.weights.append(Tensor(w, requires_grad=True))
            self.biases.append(Tensor(b, requires_grad=True))

    @classmethod
    def from_arrays(cls, weights, biases, output: str = "identity",
                    bound: float = 1.0, hidden: str = "relu") -> "Mlp":
        widths = [np.shape(weights[0])[0]] + [np.shape(w)[1] for w in weights]
        net = cls(widths, output=output, bound=bound, hidden=hidden)
        for p, value in zip(net.parameters(), _interleave(weights, biases)):
            value = np.asarray(value, dtype=np.float64).reshape(p.shape)
            p.data[...] = value
        return net

    def parameters(self) -> list[Tensor]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            out += [(f"W{k}", w), (f"b{k}", b)]
        return out

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def clone(self) -> "Mlp":
        twin = copy.copy(self)
        twin.weights = [Tensor(w.data.copy(), requires_grad=True) for w in self.weights]
        twin.biases = [Tensor(b.data.copy(), requires_grad=True) for b in self.biases]
        return twin

    def load_from(self, other: "Mlp") -> None:
        for p, q in zip(self.parameters(), other.parameters()):
            if p.shape != q.shape:
                raise UsageError(f"parameter shape mismatch {p.shape} vs {q.shape}")
            p.data[...] = q.data

    def forward(self, x, frozen: bool = False) -> Tensor:
        """Record a tape from ``x`` to the output.

        With ``frozen=True`` the parameters enter as constants, so gradients
        flow through the network to ``x`` but never into its weights.
        """
        x = as_tensor(x)
        if x.data.ndim == 1:
            x = Tensor(x.data.reshape(1, -1)) if not x._tracked else x
        if x.shape[-1] != self.widths[0]:
            raise ConfigurationError(
                f"input width {x.shape[-1]} does not match first layer {self.widths[0]}")
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if frozen:
                w, b = Tensor._make(w.data, (), "const", None), Tensor._make(b.data, (), "const", None)
            h = h @ w + b
            if k < last:
                h = h.relu() if self.hidden == "relu" else h
        if self.output == "tanh":
            h = h.tanh() * self.bound
        return h

    __call__ = forward

    def predict(self, x) -> np.ndarray:
        """Forward pass on plain arrays without recording a tape."""
        h = np.asarray(x, dtype=np.float64)
        if h.ndim == 1:
            h = h.reshape(1, -1)
        if h.shape[-1] != self.widths[0]:
            raise ConfigurationError(
                f"input width {h.shape[-1]} does not match first layer {self.widths[0]}")
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.data + b.data
            if k < last and self.hidden == "relu":
                h = np.maximum(h, 0.0)
        if self.output == "tanh":
            h = np.tanh(h) * self.bound
        return h


def forward(net: Mlp, x, frozen: bool = False) -> Tensor:
    return net.forward(x, frozen=frozen)


def _interleave(weights, biases):
    for w, b in zip(weights, biases):
        yield w
        yield b


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params, **kwargs) -> "AdamState":
        shapes = [np.shape(p.data if isinstance(p, Tensor) else p) for p in params]
        return cls(m=[np.zeros(s) for s in shapes], v=[np.zeros(s) for s in shapes], **kwargs)

    def copy(self) -> "AdamState":
        return AdamState(self.lr, self.beta1, self.beta2, self.eps, self.t,
                         [a.copy() for a in self.m], [a.copy() for a in self.v])


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update. Pure: returns ``(new_params, new_state)``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise UsageError("params, grads and optimizer state differ in length")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_params, new_m, new_v = [], [], []
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        p = np.asarray(p, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        if p.shape != g.shape or p.shape != m.shape:
            raise UsageError(f"shape mismatch in adam_step: {p.shape}, {g.shape}, {m.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_params.append(p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(state.lr, b1, b2, state.eps, t, new_m, new_v)


class Adam:
    """Stateful wrapper that applies :func:`adam_step` to a network in place."""

    def __init__(self, params, lr: float = 3e-4, **kwargs):
        self.params = list(params)
        self.state = AdamState.for_params(self.params, lr=lr, **kwargs)

    def step(self) -> None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        new, self.state = adam_step([p.data for p in self.params], grads, self.state)
        for p, value in zip(self.params, new):
            p.data = value

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
