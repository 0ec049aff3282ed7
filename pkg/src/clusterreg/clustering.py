"""Density clustering with silhouette and within-cluster SSE quality.

The clusterer grows clusters from core points (points whose epsilon
neighborhood, self included, holds at least min_pts points) and is fully
deterministic: entities are scanned by index, cluster ids are assigned in
order of first discovery, and a border point reachable from several
clusters joins the one discovered first. Distances are Euclidean.

Noise points carry the NOISE label (-1). For downstream aggregation they
can be promoted to singleton clusters via promote_noise, which keeps
every entity in play.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ClusteringError
from .preprocess import FeatureMatrix

NOISE = -1


@dataclass(frozen=True)
class NeighborhoodParams:
    """Radius and density threshold for the epsilon neighborhood."""

    eps: float
    min_pts: int

    def __post_init__(self):
        if self.eps < 0:
            raise ClusteringError("eps must be >= 0")
        if self.min_pts < 1:
            raise ClusteringError("min_pts must be >= 1")


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-entity labels in 0..num_clusters-1 or NOISE, plus core flags."""

    labels: tuple[int, ...]
    num_clusters: int
    core_flags: tuple[bool, ...]

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        flags = tuple(bool(v) for v in self.core_flags)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "core_flags", flags)
        if len(labels) != len(flags):
            raise ClusteringError("labels and core_flags length mismatch")
        used = {v for v in labels if v != NOISE}
        if any(v < 0 for v in used) or used != set(range(self.num_clusters)):
            raise ClusteringError(
                f"labels must use exactly the ids 0..{self.num_clusters - 1}"
            )
        for cid in range(self.num_clusters):
            if not any(l == cid and c for l, c in zip(labels, flags)):
                raise ClusteringError(f"cluster {cid} has no core point")

    @property
    def n_points(self) -> int:
        return len(self.labels)

    def members(self, cid: int) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l == cid]

    def noise_indices(self) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l == NOISE]


@dataclass(frozen=True)
class SilhouetteReport:
    """Per-point silhouette values and their mean over scored points."""

    per_point: tuple[float, ...]
    mean_sc: float
    a: tuple[float, ...]
    b: tuple[float, ...]


@dataclass(frozen=True)
class ClusteringQuality:
    """Summary quality of one clustering: silhouette mean, SSE, count."""

    sc: float
    sse: float
    c: int
    centroids: np.ndarray  # shape (c, n_features)

    def __post_init__(self):
        object.__setattr__(self, "centroids", np.asarray(self.centroids, dtype=float))


def _distance_matrix(values: np.ndarray) -> np.ndarray:
    diff = values[:, None, :] - values[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def region_query(points: FeatureMatrix, index: int, eps: float) -> list[int]:
    """Indices (self included, ascending) within Euclidean distance eps."""
    n = len(points.entities)
    if not 0 <= index < n:
        raise IndexError(f"index {index} out of range for {n} points")
    if eps < 0:
        raise ClusteringError("eps must be >= 0")
    d = np.sqrt(((points.values - points.values[index]) ** 2).sum(axis=1))
    return [int(i) for i in np.nonzero(d <= eps)[0]]


def dbscan(points: FeatureMatrix, params: NeighborhoodParams) -> ClusterAssignment:
    """Density clustering of the matrix rows.

    A point is core iff its eps neighborhood (self included) has at least
    min_pts points; clusters are maximal density-connected sets; non-core
    points within eps of a core point join that core's cluster; the rest
    are NOISE. Empty input yields the vacuous assignment (0 clusters)."""
    n = len(points.entities)
    if n == 0:
        return ClusterAssignment((), 0, ())
    dist = _distance_matrix(points.values)
    within = dist <= params.eps
    neighbor_lists = [np.nonzero(within[i])[0] for i in range(n)]
    core = np.array([len(nb) >= params.min_pts for nb in neighbor_lists])

    labels = np.full(n, NOISE, dtype=int)
    next_id = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        cid = next_id
        next_id += 1
        labels[i] = cid
        queue = deque([i])
        while queue:
            j = queue.popleft()
            if not core[j]:
                continue
            for k in neighbor_lists[j]:
                if labels[k] == NOISE:
                    labels[k] = cid
                    queue.append(int(k))
    return ClusterAssignment(tuple(labels), next_id, tuple(bool(c) for c in core))


def silhouette(points: FeatureMatrix, assignment: ClusterAssignment) -> SilhouetteReport:
    """Silhouette values s_i = (b_i - a_i) / max(a_i, b_i) over non-noise points.

    a_i is the mean distance to the other members of the point's cluster,
    b_i the smallest mean distance to any other cluster. Singleton-cluster
    points score 0. Noise points are excluded from scoring and from the
    mean. Requires at least 2 clusters."""
    if assignment.num_clusters < 2:
        raise ClusteringError("silhouette undefined for fewer than 2 clusters")
    labels = np.asarray(assignment.labels)
    scored = np.nonzero(labels != NOISE)[0]
    dist = _distance_matrix(points.values)
    member_idx = {cid: np.nonzero(labels == cid)[0] for cid in range(assignment.num_clusters)}

    s_vals: list[float] = []
    a_vals: list[float] = []
    b_vals: list[float] = []
    for i in scored:
        own = member_idx[labels[i]]
        b = min(
            float(dist[i, member_idx[cid]].mean())
            for cid in range(assignment.num_clusters)
            if cid != labels[i]
        )
        if len(own) == 1:
            a = 0.0
            s = 0.0
        else:
            a = float(dist[i, own].sum() / (len(own) - 1))
            denom = max(a, b)
            s = (b - a) / denom if denom > 0 else 0.0
        s_vals.append(s)
        a_vals.append(a)
        b_vals.append(b)
    return SilhouetteReport(
        per_point=tuple(s_vals),
        mean_sc=float(np.mean(s_vals)),
        a=tuple(a_vals),
        b=tuple(b_vals),
    )


def sse(points: FeatureMatrix, assignment: ClusterAssignment, sc: float = float("nan")) -> ClusteringQuality:
    """Within-cluster sum of squared distances to centroids.

    Centroid of a cluster is the mean of its member rows; noise points
    contribute 0. The optional sc value is carried into the quality record
    (silhouette is computed separately)."""
    if assignment.num_clusters < 1:
        raise ClusteringError("sse requires at least 1 cluster")
    labels = np.asarray(assignment.labels)
    centroids = np.zeros((assignment.num_clusters, points.values.shape[1]))
    total = 0.0
    for cid in range(assignment.num_clusters):
        members = points.values[labels == cid]
        centroids[cid] = members.mean(axis=0)
        total += float(((members - centroids[cid]) ** 2).sum())
    return ClusteringQuality(sc=sc, sse=total, c=assignment.num_clusters, centroids=centroids)


def sweep_params(
    points: FeatureMatrix,
    eps_grid: list[float],
    minpts_grid: list[int],
) -> list[tuple[NeighborhoodParams, ClusteringQuality, ClusterAssignment]]:
    """Evaluate every (eps, min_pts) pair and rank the admissible clusterings.

    A result is admissible when it has at least 2 clusters. Ranking is by
    descending mean silhouette, then ascending SSE, then ascending cluster
    count; remaining ties fall back to ascending (eps, min_pts) so the
    output order is deterministic. Raises when nothing is admissible."""
    if not eps_grid or not minpts_grid:
        raise ClusteringError("parameter grids must be non-empty")
    results = []
    for eps in eps_grid:
        for min_pts in minpts_grid:
            params = NeighborhoodParams(float(eps), int(min_pts))
            assignment = dbscan(points, params)
            if assignment.num_clusters < 2:
                continue
            sil = silhouette(points, assignment)
            quality = sse(points, assignment, sc=sil.mean_sc)
            results.append((params, quality, assignment))
    if not results:
        raise ClusteringError("no admissible clustering")
    results.sort(key=lambda r: (-r[1].sc, r[1].sse, r[1].c, r[0].eps, r[0].min_pts))
    return results


def promote_noise(assignment: ClusterAssignment) -> ClusterAssignment:
    """Give each noise point its own singleton cluster.

    New ids are appended after the existing ones in entity-index order.
    A promoted point is marked core: it is trivially the core of its own
    singleton (min_pts = 1 semantics)."""
    labels = list(assignment.labels)
    flags = list(assignment.core_flags)
    next_id = assignment.num_clusters
    for i, label in enumerate(labels):
        if label == NOISE:
            labels[i] = next_id
            flags[i] = True
            next_id += 1
    return ClusterAssignment(tuple(labels), next_id, tuple(flags))


def assignment_rows(entities: tuple[str, ...], assignment: ClusterAssignment) -> list[list]:
    """Rows for the `entity,cluster_id,is_core` CSV export."""
    if len(entities) != assignment.n_points:
        raise ClusteringError("entity list does not match assignment size")
    return [
        [entity, assignment.labels[i], int(assignment.core_flags[i])]
        for i, entity in enumerate(entities)
    ]


def quality_rows(
    ranked: list[tuple[NeighborhoodParams, ClusteringQuality, ClusterAssignment]],
) -> list[list]:
    """Rows for the `eps,min_pts,c,sc,sse` CSV export."""
    return [
        [params.eps, params.min_pts, quality.c, quality.sc, quality.sse]
        for params, quality, _ in ranked
    ]
