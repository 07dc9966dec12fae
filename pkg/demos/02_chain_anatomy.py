"""
The walk as a Markov chain
==========================

Stationary distribution, mixing, the spectrum and conductance, and return
profiles, on one random graph and a few tiny ones.
"""
import numpy as np

from walklab import (GnpParams, Graph, build_transitions, empirical_mixing_time, gnp_sample, return_profile,
                     spectral_report, stationary, structured_graph)

g = gnp_sample(GnpParams(1500, 3.0, 2))
table = build_transitions(g, "min_degree")

# pi is proportional to Psi(v), the sum of the edge weights 1 / min(d(v), d(w)).
st = stationary(table)
print(f"n={g.n} m={g.m}  pi range [{st.pi.min() * g.n:.3f}, {st.pi.max() * g.n:.3f}] / n")
print(f"detailed balance violation {st.detailed_balance_violation(table):.1e}")

# Mixing time: first t where every tracked start is within n^-3 of pi in total variation.
mix = empirical_mixing_time(table)
print(f"mixing time {mix.steps} steps (worst start {mix.worst_start})")

# Spectrum and conductance.  Above 20 vertices conductance is estimated from
# sampled cuts, which gives an upper bound.
rep = spectral_report(table, ts=[1, 5, 10, 20])
print(f"lambda2 {rep.lambda2:.4f}  phi {rep.phi:.4f} ({rep.phi_mode})")
print("TV from vertex 0:", {t: round(v, 5) for t, v in rep.tv_curve.items()})

# Cheeger bounds the top of the spectrum only.  On a triangle with two leaves on
# one corner the most negative eigenvalue is larger in modulus than the bound.
tri = Graph.from_edges(5, [(0, 4), (1, 4), (2, 3), (2, 4), (3, 4)])
r = spectral_report(tri)
print(f"triangle+leaves: |lambda|max {r.lambda2:.4f}, signed lambda2 {r.lambda2_signed:.4f}, "
      f"1 - phi^2/2 = {1 - r.phi ** 2 / 2:.4f}")

# Return profile: r_t = P^t(v, v) for t < T, R_v their sum.  On K4,
# r = 1, 0, 1/3, 2/9, so R_v over T = 4 is 14/9.
k4 = return_profile(structured_graph("complete", 4), "min_degree", 0, 4)
print(f"K4: r = {np.round(k4.r, 4).tolist()}, R = {k4.R1:.6f} (14/9 = {14 / 9:.6f})")

low = int(np.argmin(g.degrees))
prof = return_profile(table, None, low, mix.steps)
print(f"vertex {low} (degree {g.degrees[low]}): R_v {prof.R1:.4f}, min |R(z)| on the disk {prof.min_modulus:.3f}")
