"""Standalone reference computations for frozen test values.

Pure Python: no numpy and no imports from the package under test.
Run ``python tests/oracles/forward_oracles.py`` to regenerate the numbers.
"""
import math

# 2-3-1 network, hidden ReLU, identity output
W0 = [[0.1257, -0.1321, 0.6404], [0.1049, -0.5357, 0.3616]]
B0 = [0.0, 0.0, 0.0]
W1 = [[1.304], [0.9471], [-0.7037]]
B1 = [-1.2654]


def dense(x, W, b):
    return [sum(x[i] * W[i][j] for i in range(len(x))) + b[j] for j in range(len(b))]


def relu(v):
    return [max(0.0, t) for t in v]


def mlp(x, layers, out="identity", bound=1.0):
    h = x
    for k, (W, b) in enumerate(layers):
        h = dense(h, W, b)
        if k < len(layers) - 1:
            h = relu(h)
    if out == "tanh":
        h = [bound * math.tanh(t) for t in h]
    return h


# behavior selection: two actors (2 -> 3 -> 1, tanh * 2), two critics (3 -> 3 -> 1)
ACTOR1 = [([[0.5, -0.3, 0.8], [0.2, 0.7, -0.4]], [0.1, 0.0, -0.1]), ([[0.6], [-0.9], [0.3]], [0.05])]
ACTOR2 = [([[-0.4, 0.9, 0.1], [0.3, -0.2, 0.6]], [0.0, 0.2, 0.1]), ([[-0.7], [0.8], [0.5]], [-0.1])]
CRITIC1 = [([[0.3, -0.5, 0.2], [0.1, 0.4, -0.6], [0.9, -0.2, 0.5]], [0.0, 0.1, 0.0]),
           ([[0.7], [-0.3], [0.6]], [0.2])]
CRITIC2 = [([[-0.2, 0.6, 0.4], [0.5, -0.1, 0.3], [-0.8, 0.7, 0.2]], [0.1, 0.0, 0.1]),
           ([[0.4], [0.9], [-0.5]], [-0.1])]
STATE = [0.4, -0.7]


def behavior_oracle():
    cands = [mlp(STATE, ACTOR1, "tanh", 2.0), mlp(STATE, ACTOR2, "tanh", 2.0)]
    best = None
    for i, critic in enumerate([CRITIC1, CRITIC2]):
        for j, a in enumerate(cands):
            q = mlp(STATE + a, critic)[0]
            if best is None or q > best[0]:
                best = (q, i, j)
    return cands, best


def pendulum_euler(theta, theta_dot, torque, g=10.0, l=1.0, m=1.0, dt=0.05):
    acc = 3 * g / (2 * l) * math.sin(theta) + 3.0 / (m * l * l) * torque
    theta_dot = theta_dot + acc * dt
    return theta + theta_dot * dt, theta_dot


if __name__ == "__main__":
    print("forward 2-3-1 at (0.5, -0.5):", repr(mlp([0.5, -0.5], [(W0, B0), (W1, B1)])[0]))
    cands, best = behavior_oracle()
    print("candidates:", [repr(c[0]) for c in cands], "best (q, i, j):", best)
    print("pendulum from theta=0.1 at rest:", [repr(v) for v in pendulum_euler(0.1, 0.0, 0.0)])
    # 2-state chain: state 0 -> state 1 with r=0, state 1 absorbing with r=1, gamma=0.9
    v1 = 1.0 / (1 - 0.9)
    print("chain Q*:", [repr(0.0 + 0.9 * v1), repr(v1)])
    # probability that N(0, 0.2) lands outside [-0.5, 0.5]
    print("clip mass:", repr(math.erfc(0.5 / 0.2 / math.sqrt(2))))
