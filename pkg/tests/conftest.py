import numpy as np
import pytest

from hights import tensor as T


def finite_difference_error(fn, leaves, h=1e-5, floor=1e-8):
    """Max elementwise relative error between analytic and central-difference gradients.

    ``fn()`` must rebuild the scalar loss from the current ``leaf.data`` values.
    Relative error is ``|a - n| / max(|a|, |n|, floor)``.
    """
    analytic = T.gradients(fn(), leaves)
    worst = 0.0
    for leaf, a in zip(leaves, analytic):
        flat = leaf.data.reshape(-1)
        num = np.zeros(flat.size)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            with T.no_grad():
                up = fn().item()
            flat[i] = keep - h
            with T.no_grad():
                down = fn().item()
            flat[i] = keep
            num[i] = (up - down) / (2 * h)
        a = a.reshape(-1)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(num)), floor)
        worst = max(worst, float(np.max(np.abs(a - num) / denom)) if flat.size else 0.0)
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def triangle_complex():
    from hights.complex import SimplicialComplex
    return SimplicialComplex((((0,), (1,), (2,)), ((0, 1), (0, 2), (1, 2)), ((0, 1, 2),)), 0.5)


def random_cloud(rng):
    """Point cloud with n <= 12 vertices, patch length <= 6, and q in [0.05, 0.5]."""
    n = int(rng.integers(2, 13))
    lp = int(rng.integers(1, 7))
    P = rng.normal(size=(n, lp))
    if rng.random() < 0.3:
        # near-duplicate rows produce dense neighbourhoods and triangles
        P[rng.integers(0, n, size=n // 2)] = P[0] + 0.05 * rng.normal(size=lp)
    if rng.random() < 0.1:
        P[-1] = 0.0
    return P, float(rng.uniform(0.05, 0.5))


def brute_force_rips(S, c):
    """All vertex pairs / triples whose pairwise similarities reach ``c``."""
    n = S.shape[0]
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if S[i, j] >= c]
    tris = [(i, j, k) for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)
            if S[i, j] >= c and S[i, k] >= c and S[j, k] >= c]
    return [[(i,) for i in range(n)], edges, tris]


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
