import math

import numpy as np
import pytest

from comanifold.graph import (
    NeighborGraph,
    default_k,
    ensure_connected,
    incidence,
    is_connected,
    knn_graph,
    masked_distance,
    masked_distance_matrix,
)
from comanifold.incomplete import MaskSpec, ObservedMatrix, apply_mask
from oracles import brute_knn_edges, cheapest_connecting_edges, masked_distance_loop, union_find_components


def test_graph_rejects_self_loops_and_duplicates():
    with pytest.raises(ValueError):
        NeighborGraph(3, ((1, 1),))
    with pytest.raises(ValueError):
        NeighborGraph(3, ((0, 1), (0, 1)))
    with pytest.raises(ValueError):
        NeighborGraph(3, ((2, 1),))


def test_from_pairs_normalizes_orientation():
    G = NeighborGraph.from_pairs(3, [(2, 0), (0, 2), (1, 0), (1, 1)])
    assert G.edges == ((0, 1), (0, 2))


def test_masked_distance_complete_is_euclidean():
    a, b = np.array([1.0, 2.0, 3.0]), np.array([0.0, -1.0, 5.0])
    full = np.ones(3, dtype=bool)
    assert masked_distance(a, b, full, full) == pytest.approx(np.linalg.norm(a - b), rel=1e-15)


def test_masked_distance_zero_on_agreement():
    a = np.array([1.0, 9.0, 3.0])
    b = np.array([1.0, -4.0, 3.0])
    assert masked_distance(a, b, np.array([True, False, True]), np.ones(3, dtype=bool)) == 0.0


def test_masked_distance_hand_example():
    a = np.array([1.0, 0.0, 3.0])
    b = np.array([2.0, 5.0, 0.0])
    d = masked_distance(a, b, np.array([True, False, True]), np.array([True, True, False]))
    assert d == pytest.approx(math.sqrt(3.0), rel=1e-15)


def test_masked_distance_absent_without_common_support():
    a, b = np.ones(2), np.ones(2)
    assert masked_distance(a, b, np.array([True, False]), np.array([False, True])) is None


def test_masked_distance_matrix_matches_loop():
    X = apply_mask(np.random.default_rng(1).normal(size=(6, 8)), MaskSpec(0.5, 2))
    D = masked_distance_matrix(X, "rows")
    for i in range(6):
        for j in range(6):
            ref = 0.0 if i == j else masked_distance_loop(X.values[i], X.values[j], X.mask[i], X.mask[j])
            assert D[i, j] == (math.inf if ref is None else pytest.approx(ref, rel=1e-13))


def test_knn_collinear_points():
    X = ObservedMatrix.complete(np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]))
    assert knn_graph(X, "rows", 1).edges == ((0, 1), (1, 2))


def test_knn_full_k_gives_complete_graph():
    X = ObservedMatrix.complete(np.random.default_rng(0).normal(size=(5, 3)))
    G = knn_graph(X, "rows", 4)
    assert G.n_edges == 10


def test_knn_matches_brute_force():
    rng = np.random.default_rng(9)
    for seed in range(5):
        X = apply_mask(rng.normal(size=(6, 7)), MaskSpec(0.3, seed))
        G = knn_graph(X, "rows", 2)
        ref = brute_knn_edges(X.values, X.mask, 2)
        if union_find_components(6, ref)[0] == 1:
            assert set(G.edges) == ref
        else:
            assert ref <= set(G.edges)
        Gc = knn_graph(X, "columns", 2)
        ref_c = brute_knn_edges(X.values.T, X.mask.T, 2)
        assert ref_c <= set(Gc.edges)
        assert is_connected(G) and is_connected(Gc)


def test_knn_ties_go_to_smaller_index():
    # nodes 0, 2 and 3 are all at distance 1 from node 1
    X = ObservedMatrix.complete(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]))
    G = knn_graph(X, "rows", 1)
    assert (0, 1) in G.edges


def test_knn_rejects_node_without_common_support():
    values = np.arange(9.0).reshape(3, 3)
    mask = np.array([[True, True, False], [True, True, False], [False, False, True]])
    with pytest.raises(ValueError):
        knn_graph(ObservedMatrix(values, mask), "rows", 1)


def test_default_k():
    assert default_k(3) == 2
    assert default_k(60) == 6
    assert default_k(80) == 6


def test_ensure_connected_identity_on_connected_graph():
    G = NeighborGraph.from_pairs(3, [(0, 1), (1, 2)])
    assert ensure_connected(G, np.zeros((3, 3))) is G


def test_ensure_connected_two_singletons():
    G = NeighborGraph(2, ())
    assert ensure_connected(G, np.array([[0.0, 4.0], [4.0, 0.0]])).edges == ((0, 1),)


def test_ensure_connected_is_minimum_over_components():
    rng = np.random.default_rng(4)
    for _ in range(10):
        pts = rng.normal(size=(7, 2))
        D = np.linalg.norm(pts[:, None] - pts[None], axis=2)
        G = NeighborGraph.from_pairs(7, [(0, 1), (2, 3), (3, 4), (5, 6)])
        H = ensure_connected(G, D)
        added = set(H.edges) - set(G.edges)
        _, best_cost = cheapest_connecting_edges(7, G.edges, D)
        assert len(added) == 2 and is_connected(H)
        assert sum(D[i, j] for i, j in added) == pytest.approx(best_cost, rel=1e-14)


def test_ensure_connected_falls_back_when_all_cross_distances_absent():
    D = np.full((4, 4), np.inf)
    np.fill_diagonal(D, 0.0)
    G = ensure_connected(NeighborGraph.from_pairs(4, [(0, 1), (2, 3)]), D)
    assert is_connected(G) and G.n_edges == 3


def test_is_connected_examples():
    assert is_connected(NeighborGraph.from_pairs(4, [(0, 1), (1, 2), (2, 3)]))
    assert not is_connected(NeighborGraph.from_pairs(4, [(0, 1), (2, 3)]))


def test_is_connected_matches_union_find():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
        G = NeighborGraph.from_pairs(n, pairs)
        assert is_connected(G) == (union_find_components(n, pairs)[0] == 1)


def test_incidence_structure_and_null_space():
    G = NeighborGraph.from_pairs(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)])
    Phi = incidence(G)
    assert Phi.shape == (6, 5)
    assert np.all((Phi == 1).sum(axis=1) == 1) and np.all((Phi == -1).sum(axis=1) == 1)
    np.testing.assert_array_equal(Phi @ np.ones(5), np.zeros(6))
    assert np.linalg.matrix_rank(Phi) == 4
    H = NeighborGraph.from_pairs(4, [(0, 1), (2, 3)])
    assert np.linalg.matrix_rank(incidence(H)) == 2


def test_heads_and_tails_are_read_only():
    G = NeighborGraph.from_pairs(3, [(0, 1), (1, 2)])
    np.testing.assert_array_equal(G.heads, [0, 1])
    np.testing.assert_array_equal(G.tails, [1, 2])
    with pytest.raises(ValueError):
        G.heads[0] = 2
