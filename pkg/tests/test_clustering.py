import numpy as np
import pytest

from clusterreg.clustering import (
    NOISE,
    ClusterAssignment,
    NeighborhoodParams,
    assignment_rows,
    dbscan,
    promote_noise,
    region_query,
    silhouette,
    sse,
    sweep_params,
)
from clusterreg.errors import ClusteringError
from clusterreg.preprocess import FeatureMatrix

from oracles import check_dbscan_against_oracle, silhouette_by_hand


def matrix(points):
    arr = np.atleast_2d(np.asarray(points, dtype=float))
    if arr.shape[0] == 1 and len(points) > 1:
        arr = arr.T
    return FeatureMatrix(
        entities=tuple(f"p{i}" for i in range(arr.shape[0])),
        features=tuple(f"f{j}" for j in range(arr.shape[1])),
        values=arr,
    )


@pytest.fixture
def blob6():
    return matrix([0.0, 0.5, 1.0, 10.0, 10.5, 11.0])


class TestRegionQuery:
    def test_tiny_eps_returns_self_only(self):
        m = matrix([0.0, 1.0, 2.0])
        assert region_query(m, 1, 0.1) == [1]

    def test_derived_example(self):
        m = matrix([0.0, 0.5, 1.0, 10.0])
        assert region_query(m, 1, 0.6) == [0, 1, 2]

    def test_huge_eps_returns_everything(self):
        m = matrix([0.0, 0.5, 1.0, 10.0])
        assert region_query(m, 2, 100.0) == [0, 1, 2, 3]

    def test_out_of_range_index(self):
        m = matrix([0.0, 1.0])
        with pytest.raises(IndexError):
            region_query(m, 2, 1.0)


class TestDbscan:
    def test_empty_input_is_vacuous(self):
        m = FeatureMatrix((), ("f",), np.zeros((0, 1)))
        out = dbscan(m, NeighborhoodParams(0.5, 2))
        assert out.num_clusters == 0 and out.labels == ()

    def test_two_blob_example(self, blob6):
        out = dbscan(blob6, NeighborhoodParams(0.6, 2))
        assert out.num_clusters == 2
        assert out.labels == (0, 0, 0, 1, 1, 1)
        assert all(out.core_flags)

    def test_all_noise_when_eps_too_small(self, blob6):
        out = dbscan(blob6, NeighborhoodParams(0.05, 2))
        assert out.num_clusters == 0
        assert set(out.labels) == {NOISE}

    def test_border_point_joins_first_discovered_cluster(self):
        # 1.25 sits within eps of a core on each side but is not core itself
        m = matrix([0.0, 0.2, 0.4, 0.6, 1.9, 2.1, 2.3, 2.5, 1.25])
        out = dbscan(m, NeighborhoodParams(0.7, 4))
        assert out.num_clusters == 2
        assert out.core_flags == (True,) * 8 + (False,)
        assert out.labels == (0, 0, 0, 0, 1, 1, 1, 1, 0)  # first cluster claims it

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            n = int(rng.integers(2, 30))
            dims = int(rng.integers(1, 4))
            pts = rng.random((n, dims)) * 2
            eps = float(rng.uniform(0.05, 0.8))
            min_pts = int(rng.integers(1, 5))
            m = matrix(pts.tolist())
            out = dbscan(m, NeighborhoodParams(eps, min_pts))
            check_dbscan_against_oracle(pts, eps, min_pts, out)

    def test_permutation_stability(self):
        rng = np.random.default_rng(5)
        pts = rng.random((20, 2))
        m = matrix(pts.tolist())
        out = dbscan(m, NeighborhoodParams(0.3, 2))
        perm = rng.permutation(20)
        m2 = matrix(pts[perm].tolist())
        out2 = dbscan(m2, NeighborhoodParams(0.3, 2))
        # same partition up to relabeling; core flags permute with rows
        def parts(labels):
            groups = {}
            for i, l in enumerate(labels):
                groups.setdefault(l, set()).add(i)
            return {frozenset(v) for k, v in groups.items() if k != NOISE}

        orig = parts([out.labels[perm[i]] for i in range(20)])
        assert parts(out2.labels) == orig
        assert out2.core_flags == tuple(out.core_flags[perm[i]] for i in range(20))

    def test_noise_count_monotone_in_eps(self):
        rng = np.random.default_rng(9)
        pts = rng.random((25, 2))
        m = matrix(pts.tolist())
        for min_pts in (1, 2, 3):
            counts = []
            for eps in np.linspace(0.01, 1.0, 12):
                out = dbscan(m, NeighborhoodParams(float(eps), min_pts))
                counts.append(sum(l == NOISE for l in out.labels))
            assert all(b <= a for a, b in zip(counts, counts[1:]))


class TestSilhouette:
    def test_duplicated_clusters_score_one(self):
        m = matrix([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 5.0]])
        a = ClusterAssignment((0, 0, 1, 1), 2, (True,) * 4)
        rep = silhouette(m, a)
        assert rep.per_point == (1.0, 1.0, 1.0, 1.0)
        assert rep.mean_sc == 1.0

    def test_four_point_example_matches_hand_oracle(self):
        pts = [[0.0], [1.0], [10.0], [11.0]]
        labels = [0, 0, 1, 1]
        per_point, mean = silhouette_by_hand(pts, labels)
        rep = silhouette(matrix([0.0, 1.0, 10.0, 11.0]),
                         ClusterAssignment(tuple(labels), 2, (True,) * 4))
        assert rep.per_point == pytest.approx(per_point, abs=1e-12)
        assert rep.mean_sc == pytest.approx(mean, abs=1e-12)
        # outer points match the (10.5-1)/10.5 evaluation; inner ones use b=9.5
        assert rep.per_point[0] == pytest.approx(9.5 / 10.5, abs=1e-9)
        assert rep.per_point[1] == pytest.approx(8.5 / 9.5, abs=1e-9)
        assert mean == pytest.approx(0.8997493734335839, abs=1e-12)

    def test_single_cluster_rejected(self):
        m = matrix([0.0, 1.0])
        a = ClusterAssignment((0, 0), 1, (True, True))
        with pytest.raises(ClusteringError, match="fewer than 2"):
            silhouette(m, a)

    def test_noise_excluded_and_singletons_zero(self):
        m = matrix([0.0, 0.1, 5.0, 9.0])
        a = ClusterAssignment((0, 0, 1, NOISE), 2, (True, True, True, False))
        rep = silhouette(m, a)
        assert len(rep.per_point) == 3
        assert rep.per_point[2] == 0.0  # singleton cluster
        assert all(-1.0 <= s <= 1.0 for s in rep.per_point)

    def test_random_inputs_bounded_and_match_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(15):
            n = int(rng.integers(4, 16))
            pts = rng.random((n, 2))
            labels = rng.integers(0, 3, size=n)
            labels[:3] = [0, 1, 2]  # every id used
            m = matrix(pts.tolist())
            a = ClusterAssignment(tuple(int(v) for v in labels), 3, (True,) * n)
            rep = silhouette(m, a)
            hand_per, hand_mean = silhouette_by_hand(pts, labels)
            assert rep.per_point == pytest.approx(hand_per, abs=1e-12)
            assert rep.mean_sc == pytest.approx(hand_mean, abs=1e-12)
            assert -1.0 <= rep.mean_sc <= 1.0


class TestSse:
    def test_singletons_have_zero_sse(self):
        m = matrix([0.0, 3.0, 9.0])
        a = ClusterAssignment((0, 1, 2), 3, (True,) * 3)
        assert sse(m, a).sse == 0.0

    def test_two_point_cluster(self):
        m = matrix([[0.0, 0.0], [2.0, 0.0]])
        a = ClusterAssignment((0, 0), 1, (True, True))
        q = sse(m, a)
        assert q.sse == 2.0
        assert np.allclose(q.centroids, [[1.0, 0.0]])

    def test_noise_contributes_zero(self):
        m = matrix([0.0, 0.2, 50.0, 0.4, 100.0])
        labels = (0, 0, NOISE, 0, 1)
        a = ClusterAssignment(labels, 2, (True, True, False, True, True))
        with_noise = sse(m, a).sse
        m2 = matrix([0.0, 0.2, 0.4, 100.0])
        a2 = ClusterAssignment((0, 0, 0, 1), 2, (True,) * 4)
        assert with_noise == pytest.approx(sse(m2, a2).sse)

    def test_sse_nonnegative_random(self):
        rng = np.random.default_rng(2)
        pts = rng.random((12, 3))
        labels = tuple(int(v) for v in rng.integers(0, 2, 12)) or None
        labels = (0, 1) + tuple(int(v) for v in rng.integers(0, 2, 10))
        m = matrix(pts.tolist())
        a = ClusterAssignment(labels, 2, (True,) * 12)
        assert sse(m, a).sse >= 0.0


class TestSweep:
    def test_single_admissible_pair(self, blob6):
        out = sweep_params(blob6, [0.6], [2])
        assert len(out) == 1
        assert out[0][1].c == 2

    def test_ranking_prefers_higher_sc(self, blob6):
        # eps=0.05 is inadmissible (all noise); 0.6 and 2.0 both admissible
        out = sweep_params(blob6, [0.05, 0.6], [2])
        assert len(out) == 1
        assert out[0][0].eps == 0.6

    def test_order_contract(self):
        # two separated pairs plus a looser third blob: larger eps merges
        m = matrix([0.0, 0.1, 5.0, 5.1, 10.0, 10.4])
        out = sweep_params(m, [0.2, 0.5, 6.0], [1, 2])
        scs = [q.sc for _, q, _ in out]
        assert scs == sorted(scs, reverse=True)
        for (p1, q1, _), (p2, q2, _) in zip(out, out[1:]):
            if q1.sc == q2.sc:
                assert (q1.sse, q1.c, p1.eps, p1.min_pts) <= (q2.sse, q2.c, p2.eps, p2.min_pts)

    def test_no_admissible_clustering(self):
        m = matrix([0.0])
        with pytest.raises(ClusteringError, match="no admissible clustering"):
            sweep_params(m, [0.5], [2])

    def test_empty_grid_rejected(self, blob6):
        with pytest.raises(ClusteringError):
            sweep_params(blob6, [], [2])


class TestPromoteNoise:
    def test_noise_becomes_singletons(self):
        a = ClusterAssignment((0, NOISE, 0, NOISE), 1, (True, False, True, False))
        out = promote_noise(a)
        assert out.labels == (0, 1, 0, 2)
        assert out.num_clusters == 3
        assert out.core_flags == (True, True, True, True)

    def test_no_noise_is_identity(self):
        a = ClusterAssignment((0, 1), 2, (True, True))
        out = promote_noise(a)
        assert out.labels == a.labels and out.num_clusters == 2


def test_assignment_rows_export(blob6):
    out = dbscan(blob6, NeighborhoodParams(0.6, 2))
    rows = assignment_rows(blob6.entities, out)
    assert rows[0] == ["p0", 0, 1]
    assert len(rows) == 6


def test_assignment_invariants_enforced():
    with pytest.raises(ClusteringError):
        ClusterAssignment((0, 2), 2, (True, True))  # id 1 unused
    with pytest.raises(ClusteringError):
        ClusterAssignment((0, 0), 1, (False, False))  # no core point
