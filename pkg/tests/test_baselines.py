import logging

import numpy as np
import pytest

from mp_viz.baselines import (
    classical_mds,
    geodesic_distances,
    isomap,
    knn_graph,
    pca_project,
)
from mp_viz.dataset import pairwise_sq_distances
from mp_viz.errors import ConfigError, DisconnectedGraph, RankDeficient


def two_clumps(rng, n=10, gap=100.0):
    # with k = 6 neither clump can split: every component needs 7 points
    a = rng.normal(0.0, 0.1, size=(n, 3))
    b = rng.normal(0.0, 0.1, size=(n + 2, 3)) + gap
    return np.vstack([a, b])


def test_pca_on_collinear_data_explains_everything(rng):
    t = rng.normal(size=40)
    X = np.column_stack([t, 2 * t, -3 * t])
    result = pca_project(X, 1)
    np.testing.assert_allclose(result.explained_variance_ratio, [1.0], atol=1e-10)
    with pytest.raises(RankDeficient) as excinfo:
        pca_project(X, 2)
    assert excinfo.value.rank == 1


def test_pca_matches_svd(rng):
    X = rng.normal(size=(50, 4)) * np.array([5.0, 2.0, 1.0, 0.5])
    result = pca_project(X, 2)
    centered = X - X.mean(axis=0)
    _, s, Vt = np.linalg.svd(centered, full_matrices=False)
    np.testing.assert_allclose(np.abs(result.components), np.abs(Vt[:2].T), atol=1e-8)
    np.testing.assert_allclose(result.explained_variance_ratio, (s**2 / (s**2).sum())[:2], atol=1e-10)
    np.testing.assert_allclose(result.components.T @ result.components, np.eye(2), atol=1e-10)
    for j in range(2):
        column = result.components[:, j]
        assert column[np.argmax(np.abs(column))] > 0


def test_pca_is_deterministic(rng):
    X = rng.normal(size=(30, 5))
    np.testing.assert_array_equal(pca_project(X, 2).projection, pca_project(X, 2).projection)


def test_knn_graph_is_symmetric_union(rng):
    X = rng.normal(size=(25, 3))
    graph = knn_graph(X, 4)
    W = graph.weights.toarray()
    np.testing.assert_array_equal(W, W.T)
    assert (graph.degrees() >= 4).all()
    D = np.sqrt(pairwise_sq_distances(X).values)
    for i, j in graph.edges():
        assert W[i, j] == pytest.approx(D[i, j])


def test_knn_ties_go_to_lower_index():
    X = np.array([[0.0], [1.0], [-1.0], [5.0]])
    graph = knn_graph(X, 1)
    assert graph.neighbors[0, 0] == 1


@pytest.mark.parametrize("k", [0, 6])
def test_knn_rejects_bad_k(rng, k):
    with pytest.raises(ConfigError):
        knn_graph(rng.normal(size=(6, 2)), k)


def test_strict_policy_raises_on_split_graph(rng):
    graph = knn_graph(two_clumps(rng), 6)
    with pytest.raises(DisconnectedGraph) as excinfo:
        geodesic_distances(graph, "strict")
    assert sorted(len(c) for c in excinfo.value.components) == [10, 12]


def test_mst_policy_bridges_components(rng):
    X = two_clumps(rng)
    geo = geodesic_distances(knn_graph(X, 6), "mst").values
    assert np.isfinite(geo).all()
    np.testing.assert_array_equal(geo, geo.T)
    # crossing the bridge costs at least the gap between the clumps
    assert np.sqrt(geo[0, 15]) >= np.sqrt(pairwise_sq_distances(X).values[0, 15]) - 1e-9


def test_classical_mds_recovers_planar_configuration(rng):
    points = rng.uniform(-3.0, 3.0, size=(12, 2))
    Y = classical_mds(pairwise_sq_distances(points), 2)
    np.testing.assert_allclose(
        pairwise_sq_distances(Y).values, pairwise_sq_distances(points).values, atol=1e-8
    )


def test_isomap_on_a_flat_cloud_is_an_isometry(rng):
    plane = rng.uniform(0.0, 1.0, size=(7, 2))
    X = np.column_stack([plane, np.zeros(7), np.zeros(7)])
    result = isomap(X, k=6, d=2)
    assert result.embedded_mask.all()
    np.testing.assert_allclose(
        pairwise_sq_distances(result.embedding).values,
        pairwise_sq_distances(plane).values,
        atol=1e-8,
    )


def test_isomap_keeps_largest_component(rng, caplog):
    X = two_clumps(rng)
    with caplog.at_level(logging.WARNING, logger="mp_viz"):
        result = isomap(X, k=6, d=2, connect="largest")
    assert result.embedded_mask.sum() == 12
    np.testing.assert_array_equal(result.unembedded, np.arange(10))
    assert result.embedding.shape == (12, 2)
    assert "unembedded" in caplog.text


def test_isomap_mst_embeds_everything(rng):
    result = isomap(two_clumps(rng), k=6, d=2, connect="mst")
    assert result.embedded_mask.all()
    assert result.embedding.shape == (22, 2)


def test_isomap_rejects_unknown_policy(rng):
    with pytest.raises(ConfigError):
        isomap(rng.normal(size=(10, 2)), k=3, connect="drop")


def test_pca_ignores_a_constant_shift(rng):
    X = rng.normal(size=(30, 4)) * [3.0, 2.0, 1.0, 0.5]
    shifted = X + np.array([5.0, -3.0, 2.0, 10.0])
    np.testing.assert_allclose(
        pca_project(shifted, 2).projection, pca_project(X, 2).projection, atol=1e-9
    )


def floyd_warshall(weights):
    dense = weights.toarray()
    D = np.where(dense > 0, dense, np.inf)
    np.fill_diagonal(D, 0.0)
    for k in range(D.shape[0]):
        D = np.minimum(D, D[:, k, None] + D[None, k, :])
    return D


def test_geodesics_go_around_a_c_shape():
    angles = np.linspace(0.25 * np.pi, 1.75 * np.pi, 20)
    C = np.column_stack([np.cos(angles), np.sin(angles)])
    graph = knn_graph(C, 2)
    geo = np.sqrt(geodesic_distances(graph).values)
    np.testing.assert_allclose(geo, floyd_warshall(graph.weights), rtol=1e-12)
    assert geo[0, -1] > 2.0 * np.linalg.norm(C[0] - C[-1])


def test_geodesics_bound_straight_lines_and_obey_the_triangle_inequality(rng):
    X = rng.normal(size=(40, 3))
    G = np.sqrt(geodesic_distances(knn_graph(X, 5), "mst").values)
    E = np.sqrt(pairwise_sq_distances(X).values)
    assert (G >= E - 1e-12).all()
    assert (G[:, None, :] <= G[:, :, None] + G[None, :, :] + 1e-9).all()


def test_complete_graph_geodesics_are_straight_lines(rng):
    X = rng.normal(size=(15, 3))
    geo = geodesic_distances(knn_graph(X, 14)).values
    np.testing.assert_allclose(geo, pairwise_sq_distances(X).values, atol=1e-10)


def test_isomap_with_every_neighbour_is_classical_mds(rng):
    X = rng.normal(size=(15, 3)) * [3.0, 1.5, 0.5]
    result = isomap(X, k=14, d=2)
    assert result.embedded_mask.all()
    np.testing.assert_allclose(
        result.embedding, classical_mds(pairwise_sq_distances(X), 2), atol=1e-8
    )
