import math

import networkx as nx
import numpy as np
import pytest

from conftest import all_subsets, small_connected_suite, to_nx, two_triangles
from walklab.graph import (Graph, GnpParams, GraphError, ball, bfs_distances, components, contract_pair,
                           cut_and_internal_edges, distance, gnp_sample, is_connected, read_edgelist,
                           structured_graph, write_edgelist)


def test_gnp_params_reject_p_above_one():
    with pytest.raises(GraphError):
        GnpParams(2, 10.0, 0)
    with pytest.raises(GraphError):
        GnpParams(1, 1.0, 0)
    with pytest.raises(GraphError):
        GnpParams(10, 0.0, 0)


def test_gnp_params_omega():
    q = GnpParams(1000, 2.0, 0)
    assert q.p == pytest.approx(2 * math.log(1000) / 1000)
    assert q.omega == pytest.approx(math.log(1000))


def test_gnp_edge_count_within_three_sigma(gnp_1e4):
    n, p = 10_000, GnpParams(10_000, 2.0, 1).p
    pairs = n * (n - 1) / 2
    mean, sd = pairs * p, math.sqrt(pairs * p * (1 - p))
    assert mean == pytest.approx(9.21e4, rel=1e-3)
    assert abs(gnp_1e4.m - mean) <= 3 * sd


def test_gnp_deterministic(gnp_1e4):
    again = gnp_sample(GnpParams(10_000, 2.0, 1))
    assert np.array_equal(again.edges(), gnp_1e4.edges())
    other = gnp_sample(GnpParams(10_000, 2.0, 2))
    assert not np.array_equal(other.edges(), gnp_1e4.edges())


def test_gnp_mean_edge_count_over_seeds():
    n, c = 400, 2.0
    p = GnpParams(n, c, 0).p
    pairs = n * (n - 1) / 2
    ms = [gnp_sample(GnpParams(n, c, s)).m for s in range(100)]
    sd_of_mean = math.sqrt(pairs * p * (1 - p)) / math.sqrt(100)
    assert abs(np.mean(ms) - pairs * p) <= 5 * sd_of_mean


def test_gnp_pair_marginals():
    # every pair appears with probability p; check a chi-square-ish band on pair frequencies
    n, c, reps = 12, 1.2, 3000
    p = GnpParams(n, c, 0).p
    counts = np.zeros((n, n))
    for s in range(reps):
        e = gnp_sample(GnpParams(n, c, s)).edges()
        counts[e[:, 0], e[:, 1]] += 1
    iu = np.triu_indices(n, 1)
    freq = counts[iu] / reps
    sd = math.sqrt(p * (1 - p) / reps)
    assert np.all(np.abs(freq - p) < 5 * sd)


def test_gnp_graph_is_connected_per_oracle(gnp_1e4):
    assert is_connected(gnp_1e4)
    assert nx.is_connected(to_nx(gnp_1e4))


def test_structured_complete():
    g = structured_graph("complete", 4)
    assert g.n == 4 and g.m == 6
    assert np.all(g.degrees == 3)


def test_structured_lollipop_nine():
    g = structured_graph("lollipop", 9)
    assert g.m == 15 + 3
    deg = g.degrees
    assert list(deg).count(6) == 1
    assert deg[5] == 6
    assert deg[8] == 1
    assert np.all(deg[:5] == 5)
    assert is_connected(g)


def test_structured_cycle():
    g = structured_graph("cycle", 5)
    assert np.all(g.degrees == 2)
    assert is_connected(g)


def test_structured_star_and_path():
    s = structured_graph("star", 4)
    assert s.degrees.tolist() == [3, 1, 1, 1]
    p = structured_graph("path", 3)
    assert p.degrees.tolist() == [1, 2, 1]


@pytest.mark.parametrize("kind,n", [("cycle", 2), ("lollipop", 10), ("path", 1), ("wheel", 5)])
def test_structured_rejects(kind, n):
    with pytest.raises(GraphError):
        structured_graph(kind, n)


def test_connectivity():
    assert not is_connected(two_triangles())
    assert is_connected(structured_graph("cycle", 5))
    assert sorted(np.bincount(components(two_triangles()))) == [3, 3]


def test_balls():
    c6 = structured_graph("cycle", 6)
    assert sorted(ball(c6, 0, 1)) == [0, 1, 5]
    assert sorted(ball(c6, 0, 3)) == list(range(6))
    star = structured_graph("star", 4)
    assert sorted(ball(star, 0, 1)) == [0, 1, 2, 3]


def test_bfs_matches_networkx():
    for s in range(5):
        g = gnp_sample(GnpParams(300, 1.0, s))
        h = to_nx(g)
        ref = nx.single_source_shortest_path_length(h, 0)
        dist = bfs_distances(g, 0)
        for v in range(g.n):
            assert dist[v] == ref.get(v, -1)
        assert distance(g, 0, g.n - 1) == ref.get(g.n - 1, -1)


def test_contract_c6():
    con = contract_pair(structured_graph("cycle", 6), 0, 3)
    g = con.graph
    assert g.n == 5
    assert g.degrees[con.z] == 4
    assert sorted(g.degrees.tolist()) == [2, 2, 2, 2, 4]
    assert con.mapping[0] == con.mapping[3] == con.z


@pytest.mark.parametrize("u,v", [(0, 1), (0, 2), (2, 2)])
def test_contract_preconditions(u, v):
    with pytest.raises(GraphError):
        contract_pair(structured_graph("cycle", 6), u, v)


def test_contract_degrees_on_random_graphs():
    rng = np.random.default_rng(3)
    for s in range(20):
        g = gnp_sample(GnpParams(60, 1.5, s))
        u, v = rng.choice(g.n, 2, replace=False)
        try:
            con = contract_pair(g, int(u), int(v))
        except GraphError:
            continue
        old = np.setdiff1d(np.arange(g.n), [u, v])
        assert con.graph.degrees[con.z] == g.degrees[u] + g.degrees[v]
        assert np.array_equal(con.graph.degrees[con.mapping[old]], g.degrees[old])
        assert con.graph.m == g.m


def test_cut_and_internal_examples():
    k4 = structured_graph("complete", 4)
    assert cut_and_internal_edges(k4, [0, 1]) == (4, 1)
    assert cut_and_internal_edges(structured_graph("cycle", 5), [0, 1, 2]) == (2, 2)
    assert cut_and_internal_edges(k4, []) == (0, 0)


def test_cut_identity_exhaustive_small():
    graphs = [g for g in small_connected_suite(max_atlas=6, extra_max=10, seeds=2) if g.n <= 10][::7]
    for g in graphs:
        for S in all_subsets(g.n):
            cut, inside = cut_and_internal_edges(g, S)
            assert cut + 2 * inside == int(g.degrees[list(S)].sum())


def test_graph_invariants_rejected():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 3)])
    with pytest.raises(GraphError):
        Graph(np.array([0, 1, 1]), np.array([1], np.int32), np.array([1, 0]))  # asymmetric


def test_graph_is_immutable():
    g = structured_graph("cycle", 5)
    with pytest.raises(ValueError):
        g.neighbors[0] = 3


def test_edgelist_roundtrip(tmp_path):
    g = gnp_sample(GnpParams(200, 2.0, 5))
    path = tmp_path / "g.edges"
    write_edgelist(g, path)
    first = path.read_text().splitlines()[0]
    assert first == f"200 {g.m}"
    back = read_edgelist(path)
    assert np.array_equal(back.edges(), g.edges())


@pytest.mark.parametrize("text", ["3 1\n1 0\n", "3 2\n0 1\n", "3 1\n0 1 2\n", "x y\n", "3 1\n0 3\n"])
def test_edgelist_rejects_bad_files(tmp_path, text):
    path = tmp_path / "bad.edges"
    path.write_text(text)
    with pytest.raises(GraphError):
        read_edgelist(path)
