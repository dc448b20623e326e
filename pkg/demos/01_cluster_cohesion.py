"""Participation vectors and the dominant / non-dominant split.

A cluster's affinity graph gets a simplex-constrained participation vector
via replicator dynamics: starting from the barycenter, mass flows toward the
mutually most-similar members. The median of the positive participations
splits the cluster into a dominant core and a non-dominant boundary.
"""

import numpy as np

from ndsal import ClusterGraph, partition, replicator_dynamics

# a 6-vertex graph: vertices 0-2 form a tight (slightly lopsided) triangle,
# 3-4 a looser pair, vertex 5 hangs on weakly
W = np.array(
    [
        [0.0, 0.95, 0.88, 0.1, 0.1, 0.05],
        [0.95, 0.0, 0.91, 0.1, 0.1, 0.05],
        [0.88, 0.91, 0.0, 0.1, 0.1, 0.05],
        [0.1, 0.1, 0.1, 0.0, 0.6, 0.05],
        [0.1, 0.1, 0.1, 0.6, 0.0, 0.05],
        [0.05, 0.05, 0.05, 0.05, 0.05, 0.0],
    ]
)
graph = ClusterGraph(ids=tuple("abcdef"), weights=W)

result = replicator_dynamics(graph, tol=1e-9, max_iter=5000)
print(f"converged in {result.iterations} iterations, objective {result.objective:.4f}")
for vertex, value in zip(result.ids, result.values):
    bar = "#" * int(60 * value)
    print(f"  {vertex}: {value:8.5f} {bar}")

# the triangle absorbs all participation; everything else is boundary
split = partition(result)
print(f"\ncutoff tau = {split.cutoff:.5f}")
print("dominant   :", split.dominant_ids)
print("non-dominant:", split.nondominant_ids)

# scaling all affinities leaves the split unchanged: the update renormalizes
scaled = replicator_dynamics(
    ClusterGraph(ids=graph.ids, weights=0.25 * W), tol=1e-9, max_iter=5000
)
assert partition(scaled).dominant_ids == split.dominant_ids
print("\nscaling every edge by 0.25 leaves the split unchanged")

# a cutoff multiplier of 10 swallows the whole cluster into the boundary,
# which is exactly how the selection pool is grown when it runs short
widened = partition(result, cutoff_multiplier=10.0)
print(f"multiplier 10 -> tau {widened.cutoff:.4f}: "
      f"{len(widened.nondominant_ids)} of {graph.size} members are now selectable")
