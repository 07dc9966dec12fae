import itertools

import networkx as nx
import numpy as np
import pytest

from walklab.graph import Graph, GnpParams, gnp_sample, structured_graph

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def from_nx(h: nx.Graph) -> Graph:
    h = nx.convert_node_labels_to_integers(h)
    return Graph.from_edges(h.number_of_nodes(), list(h.edges()))


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(map(tuple, g.edges()))
    return h


def small_connected_suite(max_atlas: int = 7, extra_max: int = 12, seeds: int = 6):
    """Every connected graph on 2..max_atlas vertices plus structured and random graphs up to extra_max."""
    out = []
    for h in nx.graph_atlas_g():
        if 2 <= h.number_of_nodes() <= max_atlas and nx.is_connected(h):
            out.append(from_nx(h))
    for n in range(8, extra_max + 1):
        out.append(structured_graph("cycle", n))
        out.append(structured_graph("path", n))
        out.append(structured_graph("star", n))
        if n % 3 == 0:
            out.append(structured_graph("lollipop", n))
        for s in range(seeds):
            h = nx.gnp_random_graph(n, 0.35, seed=1000 * n + s)
            if nx.is_connected(h):
                out.append(from_nx(h))
    return out


def two_triangles() -> Graph:
    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


@pytest.fixture(scope="session")
def gnp_1e4():
    return gnp_sample(GnpParams(10_000, 2.0, 1))


def all_subsets(n):
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)


def dense_P(g: Graph, policy="min_degree") -> np.ndarray:
    from walklab.walk import build_transitions

    return build_transitions(g, policy).matrix().toarray()
