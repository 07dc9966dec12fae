"""
Auditing a random graph, and vertices the walk misses
=====================================================

The structural audit lists which of the conditions (a)..(i) a sample meets,
with a witness for each failure.  The lower-bound experiment then picks
well-separated vertices with typical neighbourhoods and counts how many a walk
of (1 - delta) n ln n steps leaves unvisited.
"""
from walklab import GnpParams, audit, classify_vertices, gnp_sample
from walklab.experiments import ExperimentConfig, connected_gnp, lower_bound_experiment

g = gnp_sample(GnpParams(10_000, 2.0, 1))
rep = audit(g, eps=0.3, c=2.0, seed=1)
for cond in rep.conditions.values():
    print(f"({cond.id}) {'pass' if cond.passed else 'FAIL'} [{cond.mode}] {cond.detail}")

# (i) asks every small set to span fewer than |S| np / 1000 edges; with
# np about 18 a single edge already breaks it.
print("witness for (i):", rep.conditions["i"].witness)

cls = classify_vertices(g, 2.0, report=rep)
print(f"low-degree set A: {cls.A.size} vertices, far-from-A set B: {cls.B.size}, |U| = {rep.U.size}")

# The radius-2 degree-band test is rarely met at this size, so use radius 1.
g2, _, _ = connected_gnp(3000, 3.0, 4)
cfg = ExperimentConfig("lower_bound", n=3000, c=3.0, eps=0.3, delta=0.3, replicas=10, p2_radius=1, seed=2)
rec = lower_bound_experiment(cfg, g=g2)
row = rec.table[0]
print(f"|S0| = {row['S0']}, |S1| = {row['S1']}, |S| = {row['S']}, t = {row['t']}")
print(f"unvisited members of S per walk: {[u['value'] for u in rec.units]}")
