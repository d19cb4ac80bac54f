import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from graphsampling.graph import Graph, GraphError  # noqa: E402

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def random_connected_weights(n, p, seed, low=0.1, high=1.0):
    """Erdos-Renyi weight matrix with uniform weights, redrawn until connected."""
    rng = np.random.default_rng(seed)
    while True:
        mask = np.triu(rng.random((n, n)) < p, 1)
        W = np.where(mask, rng.uniform(low, high, (n, n)), 0.0)
        W = W + W.T
        try:
            Graph(W)
            return W
        except GraphError:
            continue


def path_weights(n, w=1.0):
    W = np.zeros((n, n))
    i = np.arange(n - 1)
    W[i, i + 1] = W[i + 1, i] = w
    return W


def star_weights(leaves):
    W = np.zeros((leaves + 1, leaves + 1))
    W[0, 1:] = W[1:, 0] = 1.0
    return W


def complete_weights(n):
    return np.ones((n, n)) - np.eye(n)


def two_cliques_weights(size=5, bridge=0.01):
    n = 2 * size
    W = np.zeros((n, n))
    W[:size, :size] = 1.0
    W[size:, size:] = 1.0
    np.fill_diagonal(W, 0.0)
    W[size - 1, size] = W[size, size - 1] = bridge
    return W


@pytest.fixture
def two_node():
    return Graph(np.array([[0.0, 1.0], [1.0, 0.0]]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance summary ----------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
