"""The smallest weighted graph, every distance family, and the Markov checks.

Two vertices of equal weight share mass 0.2 across the edge and keep 0.3 on
each loop. Every natural distance has a closed form here, which makes this
the first sanity check to run after touching the spectral code.
"""

import numpy as np

from wgraph import GSpec, natural_distance
from wgraph.distances import electrical_commute, fundamental_matrix, shortest_path_distance
from wgraph.synthetic import two_vertex

E = two_vertex()
print("exchange matrix:\n", E.e)
print("vertex weights:", E.f)

# one eigenvalue besides the trivial one: 0.2
for spec in ["chi2", "diffusive", "frozen", "commute", "sif", GSpec("absorption", rho=0.5)]:
    D = natural_distance(E, spec)
    print(f"{D.family:>16s}  D_12 = {D.D[0, 1]:.6f}  focused={D.focused}  irreducible={D.irreducible}")

# commute distance three ways: spectral, hitting times, electrical
_, M = fundamental_matrix(E)
print("hitting times m_12, m_21:", M[0, 1], M[1, 0])
print("electrical commute:", electrical_commute(E, 0, 1))
print("shortest path (resistance 1/e_12):", shortest_path_distance(E).D[0, 1])

# sif is what remains of commute once diffusive and frozen are removed
D = {k: natural_distance(E, k).D[0, 1] for k in ("commute", "diffusive", "frozen", "sif")}
assert np.isclose(D["sif"], D["commute"] - D["diffusive"] - D["frozen"])
