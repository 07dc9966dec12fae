import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from conftest import dense_P, from_nx, two_triangles
from walklab._rng import make_rng, resolve_threads
from walklab.graph import Graph, GnpParams, GraphError, gnp_sample, structured_graph
from walklab.walk import (CapExceeded, WalkPolicy, build_transitions, cover_time_once, estimate_cover_time,
                          first_hit_times, first_visit_tail, first_visit_tails, occupancy,
                          replica_cover_times, return_frequencies, step, trace)


def harmonic_cover(n):
    return float((n - 1) * sum(Fraction(1, k) for k in range(1, n)))


def test_k4_table():
    t = build_transitions(structured_graph("complete", 4), "min_degree")
    assert np.allclose(t.probs, 1 / 3, atol=1e-15)
    assert np.allclose(t.psi, 1.0)


def test_star_table():
    t = build_transitions(structured_graph("star", 4), "min_degree")
    nb, pr = t.row(0)
    assert sorted(nb.tolist()) == [1, 2, 3]
    assert np.allclose(pr, 1 / 3)
    assert t.psi.tolist() == [3.0, 1.0, 1.0, 1.0]
    for leaf in (1, 2, 3):
        nb, pr = t.row(leaf)
        assert nb.tolist() == [0] and pr.tolist() == [1.0]


def test_path3_table():
    t = build_transitions(structured_graph("path", 3), "min_degree")
    assert t.psi.tolist() == [1.0, 2.0, 1.0]
    nb, pr = t.row(1)
    assert np.allclose(pr, 0.5)


def test_inv_sqrt_weights():
    t = build_transitions(structured_graph("star", 5), "inv_sqrt")
    assert t.psi[0] == pytest.approx(4 / 2)
    assert t.psi[1] == pytest.approx(1 / 2)


def test_isolated_vertex_named():
    g = Graph.from_edges(3, [(0, 1)])
    with pytest.raises(GraphError, match="vertex 2"):
        build_transitions(g)


def test_bad_policy_and_sampler():
    g = structured_graph("cycle", 5)
    with pytest.raises(ValueError):
        build_transitions(g, "lazy")
    with pytest.raises(ValueError):
        build_transitions(g, sampler="rejection")


@pytest.mark.parametrize("policy", list(WalkPolicy))
def test_rows_stochastic(policy):
    for s in range(5):
        g = gnp_sample(GnpParams(300, 2.0, s))
        if g.degrees.min() == 0:
            continue
        t = build_transitions(g, policy)
        assert np.abs(t.row_sums() - 1).max() <= 1e-12
        # weights symmetric: w(u,v) = w(v,u)
        W = build_transitions(g, policy).matrix().toarray() * t.psi[:, None]
        assert np.abs(W - W.T).max() <= 1e-12


def test_min_degree_psi_at_least_one():
    g = gnp_sample(GnpParams(2000, 3.0, 4))
    t = build_transitions(g, "min_degree")
    assert t.psi.min() >= 1 - 1e-12


@pytest.mark.parametrize("g", [structured_graph("cycle", 7), structured_graph("complete", 6),
                               from_nx(nx.petersen_graph()), from_nx(nx.random_regular_graph(4, 30, seed=1))])
def test_policies_identical_on_regular_graphs(g):
    tables = [build_transitions(g, p) for p in WalkPolicy]
    for t in tables[1:]:
        assert np.array_equal(t.probs, tables[0].probs)
        assert np.array_equal(t.cdf, tables[0].cdf)


def test_step_deterministic_and_forced():
    k4 = build_transitions(structured_graph("complete", 4))
    assert step(k4, 0, make_rng(5)) == step(k4, 0, make_rng(5))
    star = build_transitions(structured_graph("star", 4))
    rng = make_rng(1)
    assert all(step(star, 2, rng) == 0 for _ in range(50))


@pytest.mark.parametrize("sampler", ["cdf", "alias"])
def test_star_centre_frequencies(sampler):
    t = build_transitions(structured_graph("star", 4), sampler=sampler)
    rng = make_rng(11)
    draws = np.array([step(t, 0, rng) for _ in range(300_000)])
    freq = np.bincount(draws, minlength=4)[1:] / draws.size
    assert np.all(np.abs(freq - 1 / 3) <= 0.01)


def test_alias_matches_row_distribution():
    g = gnp_sample(GnpParams(200, 3.0, 2))
    t = build_transitions(g, "min_degree", sampler="alias")
    v = int(np.argmax(g.degrees))
    nb, pr = t.row(v)
    rng = make_rng(3)
    draws = np.array([step(t, v, rng) for _ in range(200_000)])
    freq = np.array([(draws == w).mean() for w in nb])
    assert np.all(np.abs(freq - pr) <= 5 * np.sqrt(pr * (1 - pr) / draws.size))


def test_trace_deterministic():
    t = build_transitions(gnp_sample(GnpParams(500, 3.0, 1)))
    a = trace(t, 0, 1000, make_rng(9))
    b = trace(t, 0, 1000, make_rng(9))
    assert np.array_equal(a, b) and a[0] == 0 and a.size == 1001
    # consecutive positions are adjacent
    g = t.graph
    assert all(g.has_edge(int(x), int(y)) for x, y in zip(a[:-1], a[1:]))


def test_cover_k2_is_one():
    g = structured_graph("path", 2)
    for pol in WalkPolicy:
        assert cover_time_once(g, pol, 0, make_rng(0)) == 1
    st = estimate_cover_time(g, "uniform", replicas=10, seed=3)
    assert st.mean == 1 and st.std == 0


def test_cover_disconnected_rejected():
    with pytest.raises(GraphError):
        cover_time_once(two_triangles(), "min_degree", 0, make_rng(0))


def test_cover_cap_exceeded():
    g = structured_graph("path", 50)
    with pytest.raises(CapExceeded):
        cover_time_once(g, "uniform", 0, make_rng(0), cap=10)
    st = estimate_cover_time(g, "uniform", replicas=5, seed=0, cap=10)
    assert st.censored == 5 and st.censored_fraction == 1.0


def test_k50_coupon_collector():
    oracle = harmonic_cover(50)
    assert oracle == pytest.approx(219.48, abs=0.01)
    st = estimate_cover_time(structured_graph("complete", 50), "min_degree", replicas=10_000, seed=1)
    assert abs(st.mean - oracle) <= 0.02 * oracle


def test_c10_cover():
    st = estimate_cover_time(structured_graph("cycle", 10), "min_degree", replicas=10_000, seed=2)
    assert abs(st.mean - 45) <= 0.03 * 45


def test_cover_stats_invariants_and_determinism():
    g = gnp_sample(GnpParams(300, 3.0, 5))
    a = estimate_cover_time(g, "min_degree", replicas=30, seed=8)
    b = estimate_cover_time(g, "min_degree", replicas=30, seed=8)
    assert a == b
    assert np.all(a.times >= g.n - 1)
    assert a.min <= a.mean <= a.max
    assert a.to_dict()["replicas"] == 30


def test_cover_gnp_4096_ratio():
    g = gnp_sample(GnpParams(4096, 3.0, 7))
    st = estimate_cover_time(g, "min_degree", replicas=20, seed=7)
    ratio = st.mean / (4096 * math.log(4096))
    assert 0.8 <= ratio <= 1.4


def test_replicas_independent_of_threads():
    t = build_transitions(gnp_sample(GnpParams(400, 3.0, 1)))
    one = replica_cover_times(t, 0, 12, 99, 10**7, threads=1)
    four = replica_cover_times(t, 0, 12, 99, 10**7, threads=4)
    assert np.array_equal(one, four)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("WALKLAB_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    with pytest.raises(ValueError):
        resolve_threads(0)


def test_worst_of_sampled_start():
    g = structured_graph("lollipop", 30)
    fixed = estimate_cover_time(g, "uniform", replicas=20, seed=4, start=29)
    worst = estimate_cover_time(g, "uniform", replicas=20, seed=4, start_rule="worst-of-sampled", n_starts=6)
    assert worst.start_rule == "worst-of-sampled"
    assert worst.mean >= fixed.mean * 0.5


def test_first_visit_trivial_cases():
    g = structured_graph("cycle", 7)
    assert first_visit_tail(g, "min_degree", 3, 3, 0, 10, replicas=50) == 0.0
    assert first_visit_tail(structured_graph("path", 2), "uniform", 0, 1, 0, 1, replicas=50) == 0.0
    # empty window
    assert first_visit_tails(g, "min_degree", 0, [4], 5, [0, 3], replicas=20)[0].tolist() == [1.0, 1.0]


def _avoid_oracle(P, u, v, T, t):
    # dense matrix powers: distribution at T, then walk restricted to V - {v}
    n = P.shape[0]
    x = np.linalg.matrix_power(P, T)[u].copy()
    keep = np.arange(n) != v
    Q = P[np.ix_(keep, keep)]
    y = x[keep]
    return float((y @ np.linalg.matrix_power(Q, t - T)).sum())


def test_first_visit_k100_against_matrix_oracle():
    g = structured_graph("complete", 100)
    oracle = _avoid_oracle(dense_P(g), 0, 7, 10, 500)
    emp = first_visit_tail(g, "min_degree", 0, 7, 10, 500, replicas=100_000, seed=3)
    assert abs(emp - oracle) <= 0.01


def test_first_hit_times_shape_and_sentinel():
    t = build_transitions(structured_graph("path", 40))
    hits = first_hit_times(t, None, 0, [39, 1], 0, 5, replicas=4, seed=1)
    assert hits.shape == (4, 2)
    assert np.all(hits[:, 0] == 6)  # unreachable within 5 steps
    assert np.all(hits[:, 1] == 1)


def test_occupancy_matches_stationary():
    g = gnp_sample(GnpParams(2000, 3.0, 3))
    t = build_transitions(g, "min_degree")
    pi = t.psi / t.psi.sum()
    occ = occupancy(t, None, 0, 10_000_000, seed=5)
    assert 0.5 * np.abs(occ - pi).sum() <= 0.01


def test_return_frequencies_k4():
    r = return_frequencies(structured_graph("complete", 4), "uniform", 0, 4, reps=200_000, seed=1)
    assert r[0] == 1.0 and r[1] == 0.0
    assert r[2] == pytest.approx(1 / 3, abs=0.005)
    assert r[3] == pytest.approx(2 / 9, abs=0.005)
