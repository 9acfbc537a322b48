import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcgs.graph import (TopologyError, build_complete, build_cycle, build_from_edges, build_path, laplacian,
                        parse_topology, power_iteration_max_eig, spectral_norm)
from dcgs.simnet import neighborhood_laplacian_combine


def random_connected(m, extra, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    edges = [(int(perm[i]), int(perm[rng.integers(0, i)])) for i in range(1, m)]  # random spanning tree
    for _ in range(extra):
        a, b = rng.choice(m, 2, replace=False)
        edges.append((int(a), int(b)))
    return build_from_edges(m, edges)


graphs = st.builds(random_connected, st.integers(2, 12), st.integers(0, 15), st.integers(0, 10_000))


def test_cycle_3_edges():
    assert set(build_cycle(3).edges) == {(0, 1), (1, 2), (0, 2)}


def test_cycle_10_degrees():
    g = build_cycle(10)
    assert g.n_edges == 10
    assert np.all(g.degrees == 2)


def test_cycle_2_rejected():
    with pytest.raises(TopologyError):
        build_cycle(2)


def test_two_node_path_valid():
    g = build_from_edges(2, [(0, 1)])
    assert g.n_edges == 1


def test_disconnected_rejected():
    with pytest.raises(TopologyError):
        build_from_edges(4, [(0, 1), (2, 3)])


def test_duplicate_edges_merged():
    assert build_from_edges(3, [(0, 1), (1, 0), (1, 2)]).n_edges == 2


@pytest.mark.parametrize("edges", [[(0, 0), (0, 1)], [(0, 5)]])
def test_bad_edges(edges):
    with pytest.raises(TopologyError):
        build_from_edges(2, edges)


def test_laplacian_c3():
    L = laplacian(build_cycle(3))
    np.testing.assert_array_equal(L.matrix, [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


@pytest.mark.parametrize("m,expected", [(3, 3.0), (10, 4.0)])
def test_cycle_spectral_norm(m, expected):
    L = laplacian(build_cycle(m))
    oracle = np.linalg.eigvalsh(L.matrix)[-1]
    assert abs(L.spectral_norm - oracle) <= 1e-8
    assert abs(L.spectral_norm - expected) <= 1e-8


def test_spectral_norm_small_cases():
    assert spectral_norm(np.zeros((3, 3))) == 0.0
    assert abs(spectral_norm(np.diag([0.0, 3.0, 3.0])) - 3.0) <= 1e-12
    assert abs(spectral_norm(np.array([[1.0, -1.0], [-1.0, 1.0]])) - 2.0) <= 1e-12


def test_power_iteration_rejects_asymmetric():
    with pytest.raises(ValueError):
        power_iteration_max_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_parse_topology():
    assert parse_topology("cycle(5)").n_edges == 5
    assert parse_topology("path(4)").n_edges == 3
    assert parse_topology("complete(4)").n_edges == 6
    assert parse_topology([(0, 1), (1, 2)]).m == 3
    with pytest.raises(TopologyError):
        parse_topology("star(4)")


def test_builders_agree_with_edges():
    assert set(build_path(4).edges) == {(0, 1), (1, 2), (2, 3)}
    assert build_complete(5).n_edges == 10


@given(graphs)
def test_laplacian_structure(g):
    L = laplacian(g).matrix
    np.testing.assert_array_equal(L.sum(axis=1), 0)
    np.testing.assert_array_equal(L, L.T)
    np.testing.assert_array_equal(np.diag(L), g.degrees)
    edges = set(g.edges)
    for i in range(g.m):
        for j in range(g.m):
            if i != j:
                assert L[i, j] == (-1 if (min(i, j), max(i, j)) in edges else 0)


@given(graphs, st.integers(0, 2**31))
def test_laplacian_psd_and_consensus_nullspace(g, seed):
    lap = laplacian(g)
    rng = np.random.default_rng(seed)
    for _ in range(10):
        x = rng.standard_normal(g.m)
        assert x @ lap.matrix @ x >= -1e-10
    X = np.tile(rng.standard_normal(3), (g.m, 1))
    np.testing.assert_allclose(lap.apply(X), 0, atol=1e-12)


@given(graphs)
def test_spectral_norm_matches_eigh(g):
    lap = laplacian(g)
    assert abs(lap.spectral_norm - np.linalg.eigvalsh(lap.matrix)[-1]) <= 1e-8


@given(graphs, st.integers(0, 2**31))
def test_local_combine_matches_matrix_product(g, seed):
    Z = np.random.default_rng(seed).standard_normal((g.m, 4))
    full = laplacian(g).matrix @ Z
    for i in range(g.m):
        inbox = {j: Z[j] for j in g.neighbors[i]}
        np.testing.assert_allclose(neighborhood_laplacian_combine(g, inbox, Z[i], i), full[i], atol=1e-12)
