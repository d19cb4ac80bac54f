"""Restricted Laplacian-power operator and its smallest eigen-pair.

Ground truth:
- 2-node graph, S = {0}: (L)_{Sc} = [1], (L^2)_{Sc} = [2]
- S empty: smallest pair is (0, D^{1/2} 1 / ||D^{1/2} 1||)
- random instances: dense eigh of the explicitly assembled matrix (tests/oracles.py)
"""

import numpy as np
import pytest

from graphsampling.graph import Graph, OracleSizeError, laplacian_power_apply
from graphsampling.solver import (
    ConvergenceError,
    SolverConfig,
    complement,
    dense_restricted_eigenpair,
    dense_restricted_matrix,
    restricted_operator_apply,
    smallest_eigenpair_restricted,
)

from conftest import complete_weights, path_weights, random_connected_weights
from oracles import restricted_power, smallest_pair


def assert_vectors_match(v, w, atol):
    # both sides are sign-fixed; compare directly
    np.testing.assert_allclose(v, w, atol=atol)


class TestRestrictedApply:

    def test_two_node_k1(self, two_node):
        np.testing.assert_allclose(restricted_operator_apply(two_node, [1], 1, np.ones(1)), [1.0])

    def test_two_node_k2(self, two_node):
        np.testing.assert_allclose(restricted_operator_apply(two_node, [1], 2, np.ones(1)), [2.0])

    def test_empty_set_is_full_power(self, rng):
        g = Graph(random_connected_weights(15, 0.3, seed=1))
        x = rng.standard_normal(15)
        np.testing.assert_allclose(restricted_operator_apply(g, np.arange(15), 3, x),
                                   laplacian_power_apply(g, x, 3), atol=1e-14)

    def test_matches_dense_submatrix(self, rng):
        W = random_connected_weights(20, 0.25, seed=2)
        g = Graph(W)
        A, sc = restricted_power(W, [0, 5, 7], 4)
        x = rng.standard_normal(sc.size)
        np.testing.assert_allclose(restricted_operator_apply(g, sc, 4, x), A @ x, atol=1e-12)
        np.testing.assert_allclose(dense_restricted_matrix(g, sc, 4), A, atol=1e-12)

    def test_empty_complement(self, two_node):
        with pytest.raises(ValueError, match="every node is sampled"):
            restricted_operator_apply(two_node, [], 1, np.ones(0))

    def test_unsorted_complement(self):
        g = Graph(path_weights(4))
        with pytest.raises(ValueError, match="sorted"):
            restricted_operator_apply(g, [2, 1], 1, np.ones(2))

    def test_power_bounds(self, two_node):
        with pytest.raises(ValueError):
            restricted_operator_apply(two_node, [1], 0, np.ones(1))
        with pytest.raises(ValueError, match="maximum 16"):
            restricted_operator_apply(two_node, [1], 17, np.ones(1))

    def test_complement(self):
        np.testing.assert_array_equal(complement(6, {4, 1}), [0, 2, 3, 5])


class TestSmallestPair:

    def test_two_node(self, two_node):
        pair = smallest_eigenpair_restricted(two_node, [1], 1)
        assert pair.value == pytest.approx(1.0)
        np.testing.assert_allclose(pair.vector, [1.0])

    def test_empty_set_gives_null_vector(self):
        W = random_connected_weights(30, 0.2, seed=3)
        g = Graph(W)
        for k in (1, 4):
            pair = smallest_eigenpair_restricted(g, np.arange(30), k)
            assert pair.value == 0.0
            d = W.sum(axis=1)
            np.testing.assert_allclose(pair.vector, np.sqrt(d) / np.linalg.norm(np.sqrt(d)))

    def test_full_complete_graph(self):
        g = Graph(complete_weights(3))
        assert dense_restricted_eigenpair(g, [0, 1, 2], 1).value == pytest.approx(0, abs=1e-15)

    def test_one_by_one_dense(self):
        W = random_connected_weights(8, 0.5, seed=4)
        A, sc = restricted_power(W, range(7), 3)
        assert dense_restricted_eigenpair(Graph(W), sc, 3).value == pytest.approx(A[0, 0], rel=1e-12)

    def test_ten_node_k2_against_assembled_matrix(self):
        W = random_connected_weights(10, 0.4, seed=5)
        s = np.random.default_rng(5).choice(10, 3, replace=False)
        val, vec, sc = smallest_pair(W, s, 2)
        pair = smallest_eigenpair_restricted(Graph(W), sc, 2)
        assert pair.value == pytest.approx(val, abs=1e-6)
        assert abs(pair.vector @ vec) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 4, 8])
    @pytest.mark.parametrize("seed", range(4))
    def test_matches_dense_oracle(self, k, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(30, 101))
        W = random_connected_weights(n, 4.0 / n, seed=seed)
        s = rng.choice(n, int(rng.integers(1, n // 4)), replace=False)
        val, vec, sc = smallest_pair(W, s, k)
        pair = smallest_eigenpair_restricted(Graph(W), sc, k)
        assert pair.value == pytest.approx(val, abs=1e-6)
        assert_vectors_match(pair.vector, np.sign(vec[np.abs(vec) > 1e-6][0]) * vec, atol=1e-5)

    def test_unit_norm_and_residual(self):
        W = random_connected_weights(60, 0.08, seed=6)
        g = Graph(W)
        sc = complement(60, [3, 17, 40])
        pair = smallest_eigenpair_restricted(g, sc, 4)
        assert np.linalg.norm(pair.vector) == pytest.approx(1.0, abs=1e-12)
        r = restricted_operator_apply(g, sc, 4, pair.vector) - pair.value * pair.vector
        assert np.linalg.norm(r) <= 1e-8 * max(1.0, pair.value)

    @pytest.mark.parametrize("precond", ["shifted", "dirichlet", "none"])
    def test_preconditioners_agree(self, precond):
        W = random_connected_weights(40, 0.12, seed=7)
        sc = complement(40, [0, 9, 22])
        ref = dense_restricted_eigenpair(Graph(W), sc, 2)
        pair = smallest_eigenpair_restricted(Graph(W), sc, 2,
                                             SolverConfig(preconditioner=precond, max_iters=20000))
        assert pair.value == pytest.approx(ref.value, rel=1e-8)

    def test_factor_oracle_matches_power_oracle(self):
        W = random_connected_weights(25, 0.2, seed=8)
        g = Graph(W)
        sc = complement(25, [1, 2])
        a = dense_restricted_eigenpair(g, sc, 2, method="factor")
        b = dense_restricted_eigenpair(g, sc, 2, method="power")
        assert a.value == pytest.approx(b.value, abs=1e-12)
        assert_vectors_match(a.vector, b.vector, atol=1e-6)

    def test_deterministic(self):
        g = Graph(random_connected_weights(50, 0.1, seed=9))
        sc = complement(50, [4, 30])
        a = smallest_eigenpair_restricted(g, sc, 8, SolverConfig(seed=3))
        b = smallest_eigenpair_restricted(g, sc, 8, SolverConfig(seed=3))
        assert a.value == b.value
        np.testing.assert_array_equal(a.vector, b.vector)

    def test_iteration_cap(self):
        g = Graph(random_connected_weights(80, 0.06, seed=10))
        with pytest.raises(ConvergenceError) as info:
            smallest_eigenpair_restricted(g, complement(80, [0]), 4,
                                          SolverConfig(max_iters=1, preconditioner="none"))
        assert info.value.residual > 0

    def test_oracle_size_limit(self):
        g = Graph(path_weights(12))
        with pytest.raises(OracleSizeError):
            dense_restricted_eigenpair(g, np.arange(1, 12), 1, limit=10)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            SolverConfig(tol=0)
        with pytest.raises(ValueError):
            SolverConfig(preconditioner="jacobi")
