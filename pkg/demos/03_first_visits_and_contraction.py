"""
First visits and vertex contraction
===================================

After mixing, the chance that v is still unvisited at time t is close to
exp(-t pi_v / R_v).  Merging two far-apart vertices into one leaves the
avoidance probabilities unchanged.
"""
from walklab import structured_graph
from walklab.experiments import (ExperimentConfig, admissible_pairs, connected_gnp, contraction_check,
                                 first_visit_experiment)

g, seed, rejected = connected_gnp(400, 3.0, 5)
cfg = ExperimentConfig("first_visit", n=400, c=3.0, replicas=4000, vertices=5, seed=1, exact=True)
rec = first_visit_experiment(cfg, g=g)
print(f"mixing time T = {rec.extra['T']}")
print(f"{'v':>4} {'t':>5} {'empirical':>10} {'exact':>10} {'formula':>10}")
for row in rec.table:
    print(f"{row['v']:>4} {row['t']:>5} {row['empirical']:>10.4f} {row['exact']:>10.4f} {row['predicted']:>10.4f}")

# Contraction: u and v at distance >= 3, each at least as high-degree as its
# neighbours, so every edge weight around the merged vertex is unchanged.
c12 = structured_graph("cycle", 12)
row = contraction_check(c12, 0, 6)
print(f"C12 (0, 6): max avoidance gap {row['avoidance_gap']:.1e}, pi_z - pi_u - pi_v = {row['pi_residual']:.1e}")

for u, v in admissible_pairs(g, limit=3):
    row = contraction_check(g, u, v, t_max=50)
    print(f"G(400) ({u}, {v}): gap {row['avoidance_gap']:.1e}, R_z - (R_u + R_v)/2 = {row['R_residual']:.3f}")

# Without the degree condition the weights change and the identity breaks.
p8 = structured_graph("path", 8)
row = contraction_check(p8, 0, 4)
print(f"P8 (0, 4), degree condition fails: gap {row['avoidance_gap']:.3f}, "
      f"pi residual {row['pi_residual']:.3f}")
