"""Shortest-path distances need not be squared Euclidean.

On the complete bipartite graph K_{2,3} with unit edges, weighted MDS of the
shortest-path matrix has a negative kernel eigenvalue, whatever vertex
weights are used. The commute distance on the same graph is Euclidean and
never exceeds the shortest path.
"""

import numpy as np

from wgraph import is_squared_euclidean, mds, natural_distance, shortest_path_distance
from wgraph.synthetic import complete_bipartite

E = complete_bipartite(2, 3)
sp = shortest_path_distance(E)
print("shortest path (each edge has resistance 12):\n", sp.D)

for name, p in [("vertex weights f", E.f), ("uniform weights", np.full(5, 0.2))]:
    emb = mds(sp, p)
    ok, lo = is_squared_euclidean(sp, p)
    print(f"{name:>16s}: kernel eigenvalues {np.round(emb.eigenvalues, 4)}  euclidean={ok}")

com = natural_distance(E, "commute")
print("commute:\n", np.round(com.D, 4))
print("commute euclidean:", is_squared_euclidean(com)[0])
off = ~np.eye(5, dtype=bool)
print("smallest shortest-path excess over commute:", np.min(sp.D[off] - com.D[off]))
