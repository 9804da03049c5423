import numpy as np
import pytest

from sge.graph import Graph


def make_graph(edges, **kw):
    return Graph.from_edges(edges, **kw)


@pytest.fixture
def path_graph():
    return make_graph([("a", "b"), ("b", "c")])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_graph():
    r = np.random.default_rng(3)
    edges = [(f"n{u:03d}", f"n{v:03d}") for u, v in r.integers(0, 200, (900, 2))]
    return make_graph(edges)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
