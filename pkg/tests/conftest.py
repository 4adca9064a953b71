import numpy as np
import pytest

from sfwta.cost_model import CostParams
from sfwta.network import build_network, example_network

X_DET_4DP = np.array([0.5238, 0.5238, 0.4762, 0.4762])
X_STOCH_4DP = np.array([0.4206, 0.4206, 0.5794, 0.5794])


@pytest.fixture(scope="session")
def net():
    return example_network()


@pytest.fixture(scope="session")
def params(net):
    return CostParams.from_network(net)


@pytest.fixture(scope="session")
def line_net():
    """Single route A -> B -> C."""
    return build_network("ABC", [("A", "B", 1.0, 0.5), ("B", "C", 0.2, 0.1)], [("A", "C", 2.0)])


@pytest.fixture(scope="session")
def grid_net():
    """3x2 grid with two OD pairs, several routes each."""
    nodes = ["n00", "n01", "n02", "n10", "n11", "n12"]
    edges = [
        ("n00", "n01", 0.2, 0.3), ("n01", "n02", 0.4, 0.1), ("n10", "n11", 0.3, 0.2),
        ("n11", "n12", 0.1, 0.5), ("n00", "n10", 0.5, 0.1), ("n01", "n11", 0.2, 0.2),
        ("n02", "n12", 0.3, 0.3), ("n11", "n01", 0.1, 0.4),
    ]
    return build_network(nodes, edges, [("n00", "n12", 1.0), ("n10", "n02", 0.5)])


def random_feasible(net, rng, n_vertices=6):
    """Random convex combination of all-or-nothing vertices under random costs."""
    from sfwta.shortest_path import all_or_nothing

    ys = [all_or_nothing(net, rng.uniform(0.0, 1.0, net.n_edges))[0] for _ in range(n_vertices)]
    w = rng.dirichlet(np.ones(n_vertices))
    return np.einsum("i,ij->j", w, np.array(ys))


# acceptance lines, filled by test_acceptance and printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
