import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import finite_difference, max_relative_error
from tddr.errors import ConfigurationError, UsageError
from tddr.nn import Adam, AdamState, Mlp, adam_step, forward
from tddr.tensor import Tensor, concat

# frozen from tests/oracles/forward_oracles.py
W0 = [[0.1257, -0.1321, 0.6404], [0.1049, -0.5357, 0.3616]]
B0 = [0.0, 0.0, 0.0]
W1 = [[1.304], [0.9471], [-0.7037]]
B1 = [-1.2654]
FORWARD_231 = -1.1588094


def test_identity_net_passes_input_through():
    net = Mlp.from_arrays([np.eye(2)], [np.zeros(2)], hidden="identity")
    out = forward(net, Tensor([[1.0, 2.0]]))
    np.testing.assert_array_equal(out.data, [[1.0, 2.0]])


def test_zero_weight_net_outputs_zero(rng):
    net = Mlp.from_arrays([np.zeros((4, 5)), np.zeros((5, 3))], [np.zeros(5), np.zeros(3)])
    np.testing.assert_array_equal(net(rng.normal(size=(7, 4))).data, np.zeros((7, 3)))


def test_forward_matches_hand_rolled_oracle():
    net = Mlp.from_arrays([W0, W1], [B0, B1])
    assert net(np.array([[0.5, -0.5]])).item() == pytest.approx(FORWARD_231, abs=1e-12)
    assert net.predict([0.5, -0.5])[0, 0] == pytest.approx(FORWARD_231, abs=1e-12)


def test_forward_shape_mismatch_is_configuration_error():
    net = Mlp([3, 4, 1])
    with pytest.raises(ConfigurationError):
        net(np.zeros((2, 5)))


def test_parameter_count():
    widths = [3, 7, 5, 2]
    net = Mlp(widths)
    assert net.num_parameters() == sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


def test_linear_gradient():
    w = Tensor(2.0, requires_grad=True)
    (w * 3.0).backward()
    assert w.grad == 3.0


def test_gradient_zero_at_stationary_point():
    w = Tensor(1.0, requires_grad=True)
    (w - 1.0).square().backward()
    assert w.grad == 0.0


def test_non_scalar_backward_is_usage_error():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(UsageError):
        (x * 2.0).backward()


def test_unused_parameters_get_zero_gradient(rng):
    a, b = Mlp([2, 3, 1], rng), Mlp([2, 3, 1], rng)
    a.zero_grad()
    b.zero_grad()
    a(rng.normal(size=(4, 2))).mean().backward()
    assert all(np.all(p.grad == 0) for p in b.parameters())
    assert any(np.any(p.grad != 0) for p in a.parameters())


def test_gradient_matches_finite_differences_on_2_8_1(rng):
    net = Mlp([2, 8, 1], rng)
    x = rng.normal(size=(5, 2))
    y = rng.normal(size=(5, 1))

    def loss_value():
        return float(np.mean((net.predict(x) - y) ** 2))

    net.zero_grad()
    (net(x) - y).square().mean().backward()
    fd = finite_difference(loss_value, net.parameters())
    assert max_relative_error([p.grad for p in net.parameters()], fd) < 1e-4


def test_concat_and_tanh_gradients(rng):
    x = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    z = Tensor(rng.normal(size=(3, 1)), requires_grad=True)

    def value():
        return float(np.sum(np.tanh(np.hstack([x.data, z.data])) * 2.0))

    (concat([x, z]).tanh() * 2.0).sum().backward()
    fd = finite_difference(value, [x, z])
    assert max_relative_error([x.grad, z.grad], fd) < 1e-6


def test_frozen_forward_routes_gradient_to_input_only(rng):
    net = Mlp([3, 4, 1], rng)
    net.zero_grad()
    x = Tensor(rng.normal(size=(2, 3)), requires_grad=True)
    net.forward(x, frozen=True).sum().backward()
    assert np.any(x.grad != 0)
    assert all(np.all(p.grad == 0) for p in net.parameters())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(1, 5), min_size=1, max_size=3))
def test_gradient_check_property(seed, hidden):
    rng = np.random.default_rng(seed)
    net = Mlp([3, *hidden, 2], rng)
    assert net.num_parameters() <= 100
    x = rng.normal(size=(4, 3))
    target = rng.normal(size=(4, 2))

    def value():
        return float(np.mean((net.predict(x) - target) ** 2))

    net.zero_grad()
    (net(x) - target).square().mean().backward()
    fd = finite_difference(value, net.parameters())
    assert max_relative_error([p.grad for p in net.parameters()], fd) < 1e-4


def test_seeded_init_is_bit_identical():
    a = Mlp([3, 16, 2], np.random.default_rng(7))
    b = Mlp([3, 16, 2], np.random.default_rng(7))
    for p, q in zip(a.parameters(), b.parameters()):
        assert p.data.tobytes() == q.data.tobytes()
    x = np.linspace(-1, 1, 6).reshape(2, 3)
    assert a.predict(x).tobytes() == b.predict(x).tobytes()


def test_clones_do_not_alias(rng):
    a = Mlp([2, 3, 1], rng)
    b = a.clone()
    b.weights[0].data[0, 0] += 1.0
    assert a.weights[0].data[0, 0] != b.weights[0].data[0, 0]


def test_actor_head_is_bounded_and_starts_small(rng):
    actor = Mlp([3, 64, 64, 1], rng, output="tanh", bound=2.0, final_scale=1e-2)
    out = actor.predict(rng.normal(size=(100, 3)))
    assert np.all(np.abs(out) <= 2.0)
    assert np.max(np.abs(out)) < 0.1


def test_adam_zero_gradient_leaves_params_and_decays_moments():
    p = [np.array([1.0, -2.0])]
    state = AdamState.for_params(p, lr=0.1)
    state.m[0][:] = 0.5
    state.v[0][:] = 0.25
    new_p, new_state = adam_step(p, [np.zeros(2)], state)
    # bias-corrected moments are nonzero here, so compare against a fresh zero-moment state too
    fresh_p, _ = adam_step(p, [np.zeros(2)], AdamState.for_params(p, lr=0.1))
    np.testing.assert_array_equal(fresh_p[0], p[0])
    assert np.all(np.abs(new_state.m[0]) < 0.5) and np.all(new_state.v[0] < 0.25)
    assert new_state.t == 1


def test_adam_first_step_equals_lr():
    # m = 0.1, v = 0.001 -> bias-corrected 1 and 1 -> step = lr / (1 + eps)
    p, state = adam_step([np.array([0.0])], [np.array([1.0])], AdamState.for_params([np.zeros(1)], lr=1e-3))
    assert p[0][0] == pytest.approx(-1e-3 / (1 + 1e-8), abs=1e-15)
    assert state.t == 1


def test_adam_is_deterministic():
    params = [np.array([0.3, 0.4])]
    grads = [np.array([0.1, -0.2])]
    state = AdamState.for_params(params)
    first = adam_step(params, grads, state)
    second = adam_step(params, grads, state)
    np.testing.assert_array_equal(first[0][0], second[0][0])
    np.testing.assert_array_equal(first[1].m[0], second[1].m[0])


def test_adam_shape_mismatch():
    with pytest.raises(UsageError):
        adam_step([np.zeros(2)], [np.zeros(3)], AdamState.for_params([np.zeros(2)]))


def test_adam_optimizer_reduces_loss(rng):
    net = Mlp([1, 16, 1], rng)
    opt = Adam(net.parameters(), lr=1e-2)
    x = np.linspace(-1, 1, 32).reshape(-1, 1)
    y = x ** 2
    first = None
    for _ in range(300):
        opt.zero_grad()
        loss = (net(x) - y).square().mean()
        loss.backward()
        opt.step()
        first = first if first is not None else loss.item()
    assert loss.item() < 0.1 * first
