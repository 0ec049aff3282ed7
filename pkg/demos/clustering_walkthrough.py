# Density clustering walkthrough: neighborhoods, cluster growth, and the
# two quality scores (mean silhouette and within-cluster SSE), ending with
# the parameter sweep that picks a clustering automatically.

import numpy as np

from clusterreg import (
    FeatureMatrix,
    NeighborhoodParams,
    dbscan,
    region_query,
    silhouette,
    sse,
    sweep_params,
)

# Six points on a line: two tight groups far apart.
points = FeatureMatrix(
    entities=tuple(f"p{i}" for i in range(6)),
    features=("x",),
    values=np.array([[0.0], [0.5], [1.0], [10.0], [10.5], [11.0]]),
)

# A neighborhood query returns every point within the radius, self included.
print("neighbors of p1 within 0.6:", region_query(points, 1, eps=0.6))
print("neighbors of p1 within 0.1:", region_query(points, 1, eps=0.1))

# With eps=0.6 and min_pts=2 every point has a neighbor, so each group
# grows into one cluster.
assignment = dbscan(points, NeighborhoodParams(eps=0.6, min_pts=2))
print("\nlabels:", assignment.labels)
print("clusters:", assignment.num_clusters)
print("core flags:", assignment.core_flags)

# Shrinking eps below the spacing turns everything into noise (-1).
sparse = dbscan(points, NeighborhoodParams(eps=0.05, min_pts=2))
print("\nwith eps=0.05:", sparse.labels, "->", sparse.num_clusters, "clusters")

# Quality scores for the good clustering. Silhouette contrasts cohesion
# with separation per point; SSE totals the squared centroid distances.
sil = silhouette(points, assignment)
quality = sse(points, assignment, sc=sil.mean_sc)
print("\nper-point silhouette:", np.round(sil.per_point, 4))
print("mean silhouette:", round(sil.mean_sc, 4))
print("within-cluster SSE:", round(quality.sse, 4))
print("centroids:", quality.centroids.ravel())

# The sweep tries every (eps, min_pts) pair, drops degenerate results, and
# ranks the rest by silhouette (ties: lower SSE, then fewer clusters).
ranked = sweep_params(points, eps_grid=[0.05, 0.3, 0.6, 2.0, 6.0], minpts_grid=[1, 2, 3])
print("\nsweep ranking (best first):")
for params, q, _ in ranked[:5]:
    print(f"  eps={params.eps:<4} min_pts={params.min_pts}  "
          f"c={q.c}  sc={q.sc:.4f}  sse={q.sse:.4f}")
print("selected:", ranked[0][0])
