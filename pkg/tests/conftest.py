import numpy as np
import pytest


def finite_difference(f, params, h=1e-5):
    """Central differences of scalar ``f()`` w.r.t. every entry of the given Tensors."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        it = np.nditer(p.data, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p.data[idx]
            p.data[idx] = orig + h
            up = f()
            p.data[idx] = orig - h
            down = f()
            p.data[idx] = orig
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_relative_error(a, b, floor=1e-6):
    a, b = np.concatenate([x.ravel() for x in a]), np.concatenate([x.ravel() for x in b])
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def verdict(criterion: int, ok: bool, detail: str) -> bool:
    """Record and print one pass/fail line for an acceptance criterion."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
