"""Graph construction, the normalized Laplacian and the dense spectral oracle.

Ground truth:
- K_n normalized spectrum: 0 once, n/(n-1) with multiplicity n-1
- Path P_n normalized spectrum: 1 - cos(pi j/(n-1)), j = 0..n-1
- 2-node graph: eigenvalues {0, 2}
"""

import numpy as np
import pytest

from graphsampling.graph import (
    DisconnectedGraphError,
    Graph,
    GraphError,
    IsolatedNodeError,
    OracleSizeError,
    connected_components,
    dense_spectral_basis,
    fix_sign,
    gft,
    hop_distances,
    igft,
    laplacian_apply,
    laplacian_power_apply,
    read_edge_list,
    write_edge_list,
)

from conftest import complete_weights, path_weights, random_connected_weights
from oracles import dense_laplacian, hop_distance


class TestValidation:

    def test_rejects_asymmetric(self):
        W = np.array([[0, 1.0], [0.5, 0]])
        with pytest.raises(GraphError, match="symmetric"):
            Graph(W)

    def test_rejects_negative_weight(self):
        W = np.array([[0, -1.0], [-1.0, 0]])
        with pytest.raises(GraphError, match="positive"):
            Graph(W)

    def test_rejects_self_loop(self):
        W = np.array([[1.0, 1.0], [1.0, 0]])
        with pytest.raises(GraphError, match="self-loop"):
            Graph(W)

    def test_isolated_node(self):
        W = np.zeros((3, 3))
        W[0, 1] = W[1, 0] = 1.0
        with pytest.raises(IsolatedNodeError, match="node 2"):
            Graph(W)

    def test_single_node_is_isolated(self):
        with pytest.raises(IsolatedNodeError):
            Graph(np.zeros((1, 1)))

    def test_disconnected(self):
        W = np.zeros((4, 4))
        W[0, 1] = W[1, 0] = W[2, 3] = W[3, 2] = 1.0
        with pytest.raises(DisconnectedGraphError, match="2 connected components"):
            Graph(W)
        g = Graph(W, check_connected=False)
        assert [c.tolist() for c in connected_components(g)] == [[0, 1], [2, 3]]

    def test_non_square(self):
        with pytest.raises(GraphError, match="square"):
            Graph(np.zeros((2, 3)))

    def test_from_edges_symmetrizes(self):
        g = Graph.from_edges(3, [0, 1], [1, 2], [2.0, 3.0])
        np.testing.assert_array_equal(g.adjacency.toarray(), [[0, 2, 0], [2, 0, 3], [0, 3, 0]])
        assert g.num_edges == 2
        np.testing.assert_array_equal(g.degrees, [2, 5, 3])


class TestLaplacian:

    def test_two_node_laplacian(self, two_node):
        np.testing.assert_allclose(two_node.dense_laplacian(), [[1, -1], [-1, 1]])

    def test_apply_matches_dense(self):
        W = random_connected_weights(30, 0.2, seed=3)
        g = Graph(W)
        x = np.random.default_rng(0).standard_normal((30, 4))
        np.testing.assert_allclose(laplacian_apply(g, x), dense_laplacian(W) @ x, atol=1e-13)

    def test_power_apply(self):
        W = random_connected_weights(20, 0.3, seed=4)
        g = Graph(W)
        x = np.random.default_rng(1).standard_normal(20)
        L = dense_laplacian(W)
        np.testing.assert_allclose(laplacian_power_apply(g, x, 5),
                                   np.linalg.matrix_power(L, 5) @ x, atol=1e-12)
        np.testing.assert_array_equal(laplacian_power_apply(g, x, 0), x)
        with pytest.raises(ValueError):
            laplacian_power_apply(g, x, -1)

    def test_null_vector(self):
        """``L D^{1/2} 1 = 0`` for every connected graph."""
        g = Graph(random_connected_weights(25, 0.2, seed=5))
        v = np.sqrt(g.degrees)
        assert np.linalg.norm(laplacian_apply(g, v)) < 1e-12

    def test_incidence_factor(self):
        g = Graph(random_connected_weights(15, 0.4, seed=6))
        B = g.normalized_incidence().toarray()
        np.testing.assert_allclose(B.T @ B, g.dense_laplacian(), atol=1e-13)

    def test_length_mismatch(self, two_node):
        with pytest.raises(ValueError, match="length 3"):
            laplacian_apply(two_node, np.ones(3))


class TestSpectralBasis:

    def test_complete_graph_spectrum(self):
        n = 6
        basis = dense_spectral_basis(Graph(complete_weights(n)))
        np.testing.assert_allclose(basis.eigenvalues, [0] + [n / (n - 1)] * (n - 1), atol=1e-12)

    def test_path_spectrum(self):
        n = 7
        basis = dense_spectral_basis(Graph(path_weights(n)))
        expected = 1 - np.cos(np.pi * np.arange(n) / (n - 1))
        np.testing.assert_allclose(basis.eigenvalues, expected, atol=1e-12)

    def test_spectrum_in_range_and_orthonormal(self):
        basis = dense_spectral_basis(Graph(random_connected_weights(40, 0.15, seed=7)))
        assert basis.eigenvalues[0] == pytest.approx(0, abs=1e-12)
        assert basis.eigenvalues[-1] <= 2 + 1e-12
        U = basis.eigenvectors
        np.testing.assert_allclose(U.T @ U, np.eye(40), atol=1e-12)

    def test_sign_convention(self):
        basis = dense_spectral_basis(Graph(random_connected_weights(20, 0.3, seed=8)))
        for col in basis.eigenvectors.T:
            first = col[np.abs(col) > 1e-6 * np.abs(col).max()][0]
            assert first > 0

    def test_fix_sign_vector(self):
        np.testing.assert_array_equal(fix_sign(np.array([0.0, -2.0, 1.0])), [0.0, 2.0, -1.0])

    def test_oracle_limit(self):
        g = Graph(path_weights(10))
        with pytest.raises(OracleSizeError, match="limit 5"):
            dense_spectral_basis(g, limit=5)

    def test_gft_roundtrip(self):
        basis = dense_spectral_basis(Graph(random_connected_weights(20, 0.3, seed=9)))
        f = np.random.default_rng(2).standard_normal(20)
        np.testing.assert_allclose(igft(basis, gft(basis, f)), f, atol=1e-12)
        # Parseval
        assert np.linalg.norm(gft(basis, f)) == pytest.approx(np.linalg.norm(f))

    def test_basis_is_read_only(self):
        basis = dense_spectral_basis(Graph(path_weights(4)))
        with pytest.raises(ValueError):
            basis.eigenvalues[0] = 1.0


class TestTraversal:

    def test_hop_distances_path(self):
        np.testing.assert_array_equal(hop_distances(Graph(path_weights(5)), 1), [1, 0, 1, 2, 3])

    def test_hop_distances_match_oracle(self):
        W = random_connected_weights(30, 0.1, seed=10)
        np.testing.assert_array_equal(hop_distances(Graph(W), 4), hop_distance(W, 4))


class TestEdgeListIO:

    def test_roundtrip(self, tmp_path):
        g = Graph(random_connected_weights(12, 0.4, seed=11))
        path = tmp_path / "g.txt"
        write_edge_list(g, path)
        h = read_edge_list(path)
        assert h.n == g.n
        assert (h.adjacency != g.adjacency).nnz == 0

    def test_header_keeps_trailing_node_count(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# n=3\n0 1 1.0\n1 2 0.5\n")
        assert read_edge_list(path).n == 3

    def test_malformed_line_reports_location(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 1 1.0\n1 2\n")
        with pytest.raises(GraphError, match="bad.txt:2"):
            read_edge_list(path)

    def test_nonpositive_weight(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 1 0\n")
        with pytest.raises(GraphError, match=":1: weight"):
            read_edge_list(path)
