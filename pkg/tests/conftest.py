import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nodeleak.graph import Graph

settings.register_profile(
    "default", deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def path_graph(n: int) -> Graph:
    return Graph.from_edges((i, i + 1) for i in range(n - 1))


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges((0, i) for i in range(1, leaves + 1))


def complete_graph(n: int, offset: int = 0) -> Graph:
    return Graph.from_edges((offset + i, offset + j)
                            for i in range(n) for j in range(i + 1, n))


def two_cliques(size: int = 8) -> Graph:
    a = [(i, j) for i in range(size) for j in range(i + 1, size)]
    b = [(size + i, size + j) for i in range(size) for j in range(i + 1, size)]
    return Graph.from_edges(a + b)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
