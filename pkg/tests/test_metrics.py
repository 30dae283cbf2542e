import numpy as np
import pandas as pd
import pytest

from mp_viz.errors import (
    DuplicateId,
    EmptyClusterRepaired,
    KTooLarge,
    MissingColumn,
    NonNumericCell,
    SingleCluster,
)
from mp_viz.metrics import (
    build_quality_report,
    compare_embeddings,
    continuity,
    default_neighbors,
    kmeans,
    knn_preservation,
    load_labels,
    neighbor_ranks,
    pick_representatives,
    save_labels,
    save_report,
    silhouette,
    silhouette_sweep,
    trustworthiness,
)
from mp_viz.synthetic import as_candidate_set, make_blobs


class TestNeighbourhoodScores:
    def test_matches_sklearn_trustworthiness(self, rng):
        sklearn_manifold = pytest.importorskip("sklearn.manifold")
        X = rng.normal(size=(60, 6))
        Y = X[:, :2] + 0.3 * rng.normal(size=(60, 2))
        for k in (1, 5, 12, 29):
            expected = sklearn_manifold.trustworthiness(X, Y, n_neighbors=k)
            assert trustworthiness(X, Y, k) == pytest.approx(expected, abs=1e-10)
            # continuity is trustworthiness with the spaces swapped
            swapped = sklearn_manifold.trustworthiness(Y, X, n_neighbors=k)
            assert continuity(X, Y, k) == pytest.approx(swapped, abs=1e-10)

    def test_perfect_maps_score_one(self, rng):
        X = rng.normal(size=(30, 4))
        rotation, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        Y = 3.0 * X @ rotation
        k = default_neighbors(30)
        assert trustworthiness(X, Y, k) == pytest.approx(1.0)
        assert continuity(X, Y, k) == pytest.approx(1.0)
        assert knn_preservation(X, Y, k) == pytest.approx(1.0)

    def test_scores_stay_in_unit_interval(self, rng):
        X = rng.normal(size=(40, 5))
        Y = rng.normal(size=(40, 2))
        for score in (trustworthiness(X, Y, 7), continuity(X, Y, 7), knn_preservation(X, Y, 7)):
            assert 0.0 <= score <= 1.0

    def test_knn_preservation_by_hand(self):
        X = np.array([[0.0], [1.0], [3.0], [7.0]])
        Y = np.array([[0.0], [1.0], [7.0], [3.0]])
        # nearest in X: 0->1, 1->0, 2->1, 3->2; in Y: 0->1, 1->0, 2->3, 3->1
        assert knn_preservation(X, Y, 1) == pytest.approx(2 / 4)

    def test_ties_break_by_index(self):
        Z = np.array([[0.0], [1.0], [-1.0]])
        order, ranks = neighbor_ranks(Z)
        assert order[0].tolist() == [0, 1, 2]
        assert ranks[0, 2] == 2

    @pytest.mark.parametrize("k", [0, 5, 9])
    def test_k_bounds(self, rng, k):
        X = rng.normal(size=(10, 3))
        with pytest.raises(KTooLarge):
            trustworthiness(X, X[:, :2], k)

    def test_knn_preservation_allows_larger_k(self, rng):
        X = rng.normal(size=(10, 3))
        assert knn_preservation(X, X, 9) == 1.0
        with pytest.raises(KTooLarge):
            knn_preservation(X, X, 10)

    def test_default_neighbors(self):
        assert default_neighbors(3) == 1
        assert default_neighbors(11) == 5
        assert default_neighbors(500) == 12


class TestKMeans:
    def test_recovers_separated_blobs(self):
        X, truth = make_blobs(90, 3, n_centers=3, sigma=0.05, seed=2)
        fit = kmeans(X, 3, seed=0)
        # labels are numbered by first appearance and blobs come in row order
        np.testing.assert_array_equal(fit.labels, truth)
        assert fit.inertia == pytest.approx(((X - fit.centroids[fit.labels]) ** 2).sum())

    def test_seeded_runs_agree(self, rng):
        Y = rng.normal(size=(50, 2))
        a, b = kmeans(Y, 4, seed=7), kmeans(Y, 4, seed=7)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.centroids, b.centroids)

    def test_inertia_never_increases(self, rng):
        fit = kmeans(rng.normal(size=(80, 2)), 5, seed=1, restarts=1)
        trace = np.array(fit.inertia_trace)
        assert (np.diff(trace) <= 1e-9).all()

    def test_one_cluster_is_the_mean(self, rng):
        Y = rng.normal(size=(12, 2))
        labels, centroids, inertia = kmeans(Y, 1)
        assert (labels == 0).all()
        np.testing.assert_allclose(centroids[0], Y.mean(axis=0))

    def test_one_cluster_per_point(self, rng):
        Y = rng.normal(size=(6, 2))
        fit = kmeans(Y, 6)
        assert sorted(fit.labels.tolist()) == list(range(6))
        assert fit.inertia == pytest.approx(0.0)

    @pytest.mark.parametrize("k", [0, 7])
    def test_bad_k(self, rng, k):
        with pytest.raises(KTooLarge):
            kmeans(rng.normal(size=(6, 2)), k)

    def test_empty_cluster_is_repaired(self):
        Y = np.zeros((3, 2))
        with pytest.warns(EmptyClusterRepaired):
            fit = kmeans(Y, 2, restarts=1)
        assert fit.repaired >= 1
        assert set(fit.labels.tolist()) == {0, 1}


# sklearn.metrics.silhouette_score is the reference implementation here
class TestSilhouette:
    def test_matches_sklearn(self, rng):
        sklearn_metrics = pytest.importorskip("sklearn.metrics")
        Y = rng.normal(size=(40, 2))
        labels = rng.integers(0, 4, size=40)
        labels[:4] = [0, 1, 2, 3]
        assert silhouette(Y, labels) == pytest.approx(sklearn_metrics.silhouette_score(Y, labels))

    def test_ignores_uniform_scaling_and_shifts(self, rng):
        Y = rng.normal(size=(30, 2))
        labels = np.repeat([0, 1, 2], 10)
        base = silhouette(Y, labels)
        for factor, offset in ((1e-3, 0.0), (250.0, 7.5), (3.0, -40.0)):
            assert silhouette(Y * factor + offset, labels) == pytest.approx(base, rel=1e-9)

    def test_singletons_score_zero(self):
        Y = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 0.0]])
        # point 2 is alone and scores 0
        expected = ((1 - 0.1 / 5.0) + (1 - 0.1 / 4.9)) / 3
        assert silhouette(Y, [0, 0, 1]) == pytest.approx(expected)

    def test_single_cluster_rejected(self, rng):
        with pytest.raises(SingleCluster):
            silhouette(rng.normal(size=(5, 2)), [3] * 5)

    def test_sweep_skips_impossible_k(self, rng):
        sweep = silhouette_sweep(rng.normal(size=(5, 2)), restarts=2)
        assert [k for k, _ in sweep] == [2, 3, 4]
        assert all(-1.0 <= s <= 1.0 for _, s in sweep)


def test_pick_representatives_takes_the_nearest_member():
    Y = np.array([[0.0, 0.0], [1.0, 0.0], [0.4, 0.0], [10.0, 0.0], [11.0, 0.0]])
    cs = as_candidate_set(Y, prefix="d")
    labels = np.array([0, 0, 0, 1, 1])
    centroids = np.array([[0.5, 0.0], [10.5, 0.0]])
    # d0003 and d0004 tie; the lower index wins
    assert pick_representatives(cs, labels, centroids, Y) == ["d0002", "d0003"]


def test_quality_report_and_files(tmp_path, rng):
    X = rng.normal(size=(20, 5))
    cs = as_candidate_set(X)
    report = build_quality_report(cs, X, X[:, :2], clusters=3, seed=0, method="pca", sweep=True)
    assert report.k_used == default_neighbors(20) == 9
    assert report.clusters == 3 and len(report.representative_ids) == 3
    assert report.silhouette is not None
    assert [k for k, _ in report.sweep] == list(range(2, 13))

    report_path, labels_file = save_report(report, tmp_path / "q.txt")
    text = report_path.read_text()
    assert text.startswith("method = pca\nn = 20\nk_used = 9\n")
    assert "representative_ids = " + ",".join(report.representative_ids) in text
    assert labels_file.name == "q.labels.csv"
    loaded = load_labels(labels_file)
    assert list(loaded) == list(cs.ids)
    assert list(loaded.values()) == report.labels.tolist()


def test_report_without_silhouette(rng):
    X = rng.normal(size=(6, 3))
    report = build_quality_report(as_candidate_set(X), X, X[:, :2], clusters=6)
    assert report.silhouette is None
    assert ("silhouette", None) in report.pairs()


@pytest.mark.parametrize(
    "text, error",
    [
        ("id,cluster\na,1\n", MissingColumn),
        ("id,label\na,1\na,2\n", DuplicateId),
        ("id,label\na,one\n", NonNumericCell),
    ],
)
def test_load_labels_rejects_bad_tables(tmp_path, text, error):
    path = tmp_path / "labels.csv"
    path.write_text(text)
    with pytest.raises(error):
        load_labels(path)


def test_save_labels_format(tmp_path):
    path = save_labels(tmp_path / "l.csv", ["a", "b"], np.array([2, 0]))
    assert path.read_text() == "id,label\na,2\nb,0\n"


def test_compare_embeddings_table(rng):
    X = rng.normal(size=(30, 5))
    frame = compare_embeddings(
        X, {"identity": X, "half": (X[:20, :2], np.arange(20))}, clusters=3, seed=0
    )
    assert list(frame.columns) == [
        "method", "n", "k", "trustworthiness", "continuity", "knn_preservation", "silhouette",
    ]
    identity, half = frame.to_dict("records")
    assert identity["n"] == 30 and identity["k"] == 12
    assert identity["trustworthiness"] == pytest.approx(1.0)
    assert half["n"] == 20 and half["k"] == 9
    assert frame["silhouette"].notna().all()


def test_compare_uses_true_labels_when_given(rng):
    X, truth = make_blobs(30, 3, n_centers=3, sigma=0.05, seed=1)
    frame = compare_embeddings(X, {"raw": X[:, :2]}, true_labels=truth)
    assert frame.loc[0, "silhouette"] == pytest.approx(silhouette(X[:, :2], truth))
    without = compare_embeddings(X, {"raw": X[:, :2]})
    assert pd.isna(without.loc[0, "silhouette"])
