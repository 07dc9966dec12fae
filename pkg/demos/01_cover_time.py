"""
Cover times of the min-degree walk
==================================

Cover time on small structured graphs, then on sparse random graphs,
and finally a lollipop graph where the two walk policies differ a lot.
"""
import math

from walklab import estimate_cover_time, structured_graph
from walklab.experiments import ExperimentConfig, cover_scaling, policy_comparison, cover_floor

# On the complete graph every policy is the simple walk, so the cover time is
# the coupon collector: (n - 1) * H_{n-1} steps from any start.
k50 = structured_graph("complete", 50)
st = estimate_cover_time(k50, "min_degree", replicas=5000, seed=1)
exact = 49 * sum(1 / k for k in range(1, 50))
print(f"K50: simulated {st.mean:.1f} (sd {st.std:.1f}), coupon collector {exact:.2f}")

# On a cycle the walk must sweep both arcs: n(n-1)/2 steps.
c10 = estimate_cover_time(structured_graph("cycle", 10), "min_degree", replicas=5000, seed=1)
print(f"C10: simulated {c10.mean:.1f}, exact 45")

# Sparse random graphs with p = c ln n / n.  The ratio to n ln n drifts down
# toward one as n grows.
cfg = ExperimentConfig("cover_scaling", c=3.0, n_grid=[512, 2048, 8192], graphs=5, replicas=4, seed=7)
for row in cover_scaling(cfg).table:
    n = row["n"]
    print(f"G({n}, 3 ln n / n): mean {row['mean_cover']:.0f}  ratio {row['ratio']:.3f}  "
          f"floor (n/4) ln(n/2) = {cover_floor(n):.0f}")

# A clique with a long path attached: the simple walk keeps falling back into
# the clique, the min-degree walk is pulled along the path.
cfg = ExperimentConfig("policy_comparison", structure="lollipop", n=150, policies=["uniform", "min_degree"],
                       replicas=40, seed=3, cap_mult=50_000)
rows = {r["policy"]: r for r in policy_comparison(cfg).table}
ratio = rows["uniform"]["mean_cover"] / rows["min_degree"]["mean_cover"]
print(f"lollipop n=150: uniform {rows['uniform']['mean_cover']:.0f}, "
      f"min_degree {rows['min_degree']['mean_cover']:.0f}, ratio {ratio:.1f}")
print(f"n ln n for comparison: {150 * math.log(150):.0f}")
