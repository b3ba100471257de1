import numpy as np
import pytest

from phasecap.phase_space import standard_j


def random_pd(rng, dim, floor=0.5):
    g = rng.normal(size=(dim, dim)) / np.sqrt(dim)
    return g @ g.T + floor * np.eye(dim)


def random_symmetric(rng, n, scale=1.0):
    g = rng.normal(size=(n, n)) * scale
    return 0.5 * (g + g.T)


def random_symplectic(rng, n, factors=4, scale=0.7):
    """Product of elementary symplectic factors: upper/lower shears with
    symmetric blocks and block-diagonal maps diag(A, A^{-T})."""
    eye, zero = np.eye(n), np.zeros((n, n))
    s = np.eye(2 * n)
    for i in range(factors):
        kind = i % 3
        if kind == 0:
            f = np.block([[eye, random_symmetric(rng, n, scale)], [zero, eye]])
        elif kind == 1:
            f = np.block([[eye, zero], [random_symmetric(rng, n, scale), eye]])
        else:
            a = eye + scale * rng.normal(size=(n, n)) / np.sqrt(n)
            while abs(np.linalg.det(a)) < 0.2:
                a = eye + scale * rng.normal(size=(n, n)) / np.sqrt(n)
            f = np.block([[a, zero], [zero, np.linalg.inv(a).T]])
        s = s @ f
    return s


def random_invertible(rng, dim):
    while True:
        g = rng.normal(size=(dim, dim))
        if np.linalg.cond(g) < 50:
            return g


def j(n):
    return standard_j(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
