import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from conftest import dense_P
from walklab.chain import (BirthDeathParams, conductance, exact_avoidance, first_visit_prediction,
                           is_bipartite, return_matrix, second_eigenvalue, stationary)
from walklab.experiments import ExperimentConfig, contraction_check, p3_holds
from walklab.graph import (Graph, GraphError, bfs_distances, contract_pair, cut_and_internal_edges,
                           read_edgelist, write_edgelist)
from walklab.typicality import classify_vertices
from walklab.walk import WalkPolicy, build_transitions

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
POLICIES = st.sampled_from(list(WalkPolicy))


@st.composite
def connected_graphs(draw, min_n=2, max_n=12):
    """A random spanning tree plus random extra edges."""
    n = draw(st.integers(min_n, max_n))
    edges = {(draw(st.integers(0, v - 1)), v) for v in range(1, n)}
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    extra = draw(st.lists(st.sampled_from(pairs), max_size=2 * n))
    return Graph.from_edges(n, sorted(edges | set(extra)))


@st.composite
def edge_sets(draw, max_n=15):
    n = draw(st.integers(1, max_n))
    if n == 1:
        return n, []
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    return n, draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))


@SETTINGS
@given(edge_sets())
def test_graph_construction_invariants(data):
    n, edges = data
    g = Graph.from_edges(n, edges)
    assert g.m == len(edges)
    assert g.degrees.sum() == 2 * g.m
    for u in range(n):
        nb = g.adj(u)
        assert u not in nb and len(set(nb.tolist())) == nb.size
        assert all(u in g.adj(int(w)) for w in nb)


@SETTINGS
@given(edge_sets())
def test_edgelist_roundtrip_property(tmp_path_factory, data):
    n, edges = data
    if n < 2:
        return
    g = Graph.from_edges(n, edges)
    path = tmp_path_factory.mktemp("el") / "g.edges"
    write_edgelist(g, path)
    assert np.array_equal(read_edgelist(path).edges(), g.edges())


@SETTINGS
@given(connected_graphs(), st.data())
def test_cut_identity(g, data):
    S = data.draw(st.lists(st.integers(0, g.n - 1), unique=True))
    cut, inside = cut_and_internal_edges(g, S)
    assert cut + 2 * inside == int(g.degrees[S].sum()) if S else (cut, inside) == (0, 0)


@SETTINGS
@given(connected_graphs(min_n=4), st.data())
def test_contract_pair_degrees(g, data):
    u = data.draw(st.integers(0, g.n - 1))
    v = data.draw(st.integers(0, g.n - 1))
    try:
        con = contract_pair(g, u, v)
    except GraphError:
        assert u == v or bfs_distances(g, u)[v] in (1, 2)
        return
    assert con.graph.degrees[con.z] == g.degrees[u] + g.degrees[v]
    rest = np.setdiff1d(np.arange(g.n), [u, v])
    assert np.array_equal(con.graph.degrees[con.mapping[rest]], g.degrees[rest])


@SETTINGS
@given(connected_graphs(), POLICIES)
def test_rows_stochastic_and_detailed_balance(g, policy):
    t = build_transitions(g, policy)
    assert np.abs(t.row_sums() - 1).max() <= 1e-12
    st_ = stationary(t)
    assert abs(st_.pi.sum() - 1) <= 1e-12 and np.all(st_.pi > 0)
    assert st_.detailed_balance_violation(t) <= 1e-12
    if WalkPolicy(policy) is WalkPolicy.MIN_DEGREE:
        assert t.psi.min() >= 1 - 1e-12


@SETTINGS
@given(connected_graphs(), POLICIES, st.data())
def test_avoidance_monotone(g, policy, data):
    u = data.draw(st.integers(0, g.n - 1))
    v = data.draw(st.integers(0, g.n - 1))
    vals = [exact_avoidance(g, policy, u, [v], t) for t in range(12)]
    assert all(0 <= x <= 1 for x in vals)
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


@SETTINGS
@given(connected_graphs(min_n=5), POLICIES, st.data())
def test_contraction_identity(g, policy, data):
    far = [(u, v) for u in range(g.n) for v, d in enumerate(bfs_distances(g, u)) if d >= 3 and u < v]
    if not far:
        return
    u, v = data.draw(st.sampled_from(far))
    row = contraction_check(g, u, v, policy=policy, t_max=50)
    if row["expected_exact"]:
        assert row["avoidance_gap"] <= 1e-10
    if p3_holds(g, u) and p3_holds(g, v):
        assert abs(row["pi_residual"]) <= 1e-12


@SETTINGS
@given(connected_graphs(min_n=3, max_n=16), POLICIES)
def test_second_eigenvalue_against_eigvalsh(g, policy):
    t = build_transitions(g, policy)
    pi = stationary(t).pi
    P = dense_P(g, policy)
    d = np.sqrt(pi)
    ev = np.linalg.eigvalsh(d[:, None] * P / d[None, :])
    assert second_eigenvalue(t) == pytest.approx(np.sort(np.abs(ev))[-2], abs=1e-6)
    assert second_eigenvalue(t, signed=True) == pytest.approx(ev[-2], abs=1e-6)
    assert 0 <= second_eigenvalue(t) <= 1


@SETTINGS
@given(connected_graphs(min_n=3), POLICIES)
def test_return_probabilities_approach_pi(g, policy):
    t = build_transitions(g, policy)
    assume(not is_bipartite(g))
    pi = stationary(t).pi
    lam = second_eigenvalue(t)
    R = return_matrix(t, None, np.arange(g.n), 40)
    assert np.all(R[:, 0] == 1) and np.all((R >= 0) & (R <= 1 + 1e-12))
    env = 2 * lam ** np.arange(40)
    assert np.all(np.abs(R - pi[:, None]) <= env[None, :] + 1e-12)


@SETTINGS
@given(connected_graphs(max_n=10), POLICIES)
def test_conductance_range(g, policy):
    res = conductance(g, policy)
    assert 0 <= res.phi <= 1


@SETTINGS
@given(st.floats(0, 0.5), st.floats(0, 0.5), st.integers(1, 200))
def test_birth_death_params(alpha, rho, T):
    if rho < alpha or alpha + rho > 1:
        with pytest.raises(ValueError):
            BirthDeathParams(alpha, rho, T)
        return
    M = BirthDeathParams(alpha, rho, T).transition_matrix()
    assert np.allclose(M.sum(axis=1), 1) and np.all(M >= 0)


@SETTINGS
@given(st.floats(1e-6, 0.5), st.floats(1, 50), st.floats(0, 1e4), st.floats(0, 1e4))
def test_first_visit_prediction_monotone(pi_v, R_v, t1, t2):
    a, b = first_visit_prediction(pi_v, R_v, min(t1, t2)), first_visit_prediction(pi_v, R_v, max(t1, t2))
    assert 0 <= b <= a <= 1


@SETTINGS
@given(connected_graphs(min_n=2, max_n=15), st.floats(0.2, 10))
def test_classes_partition(g, np_):
    cls = classify_vertices(g, np_=np_)
    assert cls.labels.size == g.n
    assert np.intersect1d(cls.A, cls.B).size == 0
    assert set(cls.A.tolist()) == set(np.flatnonzero(cls.labels == "A").tolist())


@SETTINGS
@given(st.integers(1, 10), st.integers(2, 10_000), st.floats(0.5, 5), st.integers(0, 2**32))
def test_config_hash_roundtrip(replicas, n, c, seed):
    cfg = ExperimentConfig("cover_scaling", n=n, c=c, replicas=replicas, seed=seed)
    back = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back.hash == cfg.hash and back == cfg
    assert math.isclose(back.c, c)
