"""Least-squares and alternating-projection recovery of bandlimited signals.

Ground truth: signals built from known eigenvectors below the cutoff, so
the reconstruction target is exact. Sampling sets come from greedy
selection, whose cutoff estimate guarantees uniqueness in the band.
"""

import numpy as np
import pytest

from graphsampling.filters import apply_exact_filter, ideal_kernel
from graphsampling.graph import Graph, dense_spectral_basis
from graphsampling.reconstruct import (
    PocsConfig,
    RankDeficiencyError,
    SampledSignal,
    least_squares_reconstruct,
    pocs_reconstruct,
    read_sampled_signal,
    read_signal,
    sample,
    write_sampled_signal,
    write_signal,
)
from graphsampling.sampling import greedy_select

from conftest import path_weights, random_connected_weights


@pytest.fixture(scope="module")
def setup20():
    """20-node graph, greedy set of 5 and a signal in the span of u_1..u_3."""
    g = Graph(random_connected_weights(20, 0.25, seed=21))
    basis = dense_spectral_basis(g)
    sset = greedy_select(g, 5, 8)
    assert sset.omega > basis.eigenvalues[2]
    f = basis.eigenvectors[:, :3] @ np.array([1.0, -0.7, 0.4])
    return g, basis, sset, f


class TestSample:

    def test_all_nodes(self, rng):
        f = rng.standard_normal(6)
        np.testing.assert_array_equal(sample(f, range(6)).values, f)

    def test_empty(self):
        assert len(sample(np.ones(4), [])) == 0

    def test_indicator(self):
        f = np.zeros(5)
        f[3] = 1.0
        np.testing.assert_array_equal(sample(f, [3]).values, [1.0])

    def test_order_kept(self):
        s = sample(np.arange(5.0), [4, 1])
        np.testing.assert_array_equal(s.nodes, [4, 1])
        np.testing.assert_array_equal(s.values, [4.0, 1.0])

    def test_validation(self):
        with pytest.raises(ValueError, match="unique"):
            SampledSignal([1, 1], [0.0, 0.0])
        with pytest.raises(ValueError, match="2 nodes but 1 values"):
            SampledSignal([0, 1], [0.0])
        with pytest.raises(IndexError):
            sample(np.ones(3), [3])

    def test_embed(self):
        np.testing.assert_array_equal(SampledSignal([2, 0], [5.0, 7.0]).embed(4), [7, 0, 5, 0])


class TestLeastSquares:

    def test_constant_class_from_one_node(self):
        g = Graph(random_connected_weights(15, 0.3, seed=22))
        basis = dense_spectral_basis(g)
        f = 2.5 * basis.eigenvectors[:, 0]
        rec = least_squares_reconstruct(basis, sample(f, [7]), 1e-6)
        np.testing.assert_allclose(rec, f, atol=1e-12)

    def test_in_band_exact(self, setup20):
        _, basis, sset, f = setup20
        rec = least_squares_reconstruct(basis, sample(f, sset.nodes), sset.omega)
        assert np.linalg.norm(rec - f) / np.linalg.norm(f) <= 1e-8

    def test_out_of_band_normal_equations(self, setup20, rng):
        _, basis, sset, _ = setup20
        f = rng.standard_normal(20)
        rec = least_squares_reconstruct(basis, sample(f, sset.nodes), sset.omega)
        band = np.flatnonzero(basis.eigenvalues < sset.omega)
        A = basis.eigenvectors[np.ix_(sset.nodes, band)]
        resid = rec[sset.nodes] - f[sset.nodes]
        np.testing.assert_allclose(A.T @ resid, 0.0, atol=1e-10)

    def test_multiple_columns(self, setup20):
        _, basis, sset, f = setup20
        F = np.column_stack([f, 2 * f])
        rec = least_squares_reconstruct(basis, sample(F, sset.nodes), sset.omega)
        np.testing.assert_allclose(rec, F, atol=1e-10)

    def test_too_few_samples(self, setup20):
        _, basis, _, f = setup20
        with pytest.raises(RankDeficiencyError) as info:
            least_squares_reconstruct(basis, sample(f, [0, 1]), basis.eigenvalues[3] + 1e-9)
        assert info.value.columns == 4

    def test_rank_deficient_twin_leaves(self):
        # nodes 6 and 7 hang off node 0 with equal weights, so e_6 - e_7 is an
        # eigenvector (lambda = 1) invisible on every other node
        W = np.zeros((8, 8))
        W[:6, :6] = path_weights(6)
        W[0, 6] = W[6, 0] = W[0, 7] = W[7, 0] = 1.0
        basis = dense_spectral_basis(Graph(W))
        with pytest.raises(RankDeficiencyError, match="rank 4 < 5") as info:
            least_squares_reconstruct(basis, sample(np.ones(8), range(6)), 1.2)
        assert (info.value.rank, info.value.columns) == (4, 5)

    def test_empty_band(self, setup20):
        _, basis, sset, f = setup20
        with pytest.raises(ValueError, match="passband is empty"):
            least_squares_reconstruct(basis, sample(f, sset.nodes), 0.0)


class TestPocs:

    def test_ideal_matches_least_squares(self, setup20):
        g, basis, sset, f = setup20
        res = pocs_reconstruct(g, sample(f, sset.nodes), sset.omega,
                               PocsConfig(kernel="ideal", stop_tol=1e-12, max_iters=5000), basis=basis)
        ls = least_squares_reconstruct(basis, sample(f, sset.nodes), sset.omega)
        assert res.converged
        assert np.linalg.norm(res.signal - ls) / np.linalg.norm(ls) <= 1e-6

    def test_non_expansive_towards_solution(self, setup20):
        g, basis, sset, f = setup20
        dist = []
        pocs_reconstruct(g, sample(f, sset.nodes), sset.omega,
                         PocsConfig(kernel="ideal", max_iters=200), basis=basis,
                         callback=lambda i, x: dist.append(np.linalg.norm(x - f)))
        assert np.all(np.diff(dist) <= 1e-10)

    def test_sample_residual_shrinks(self, setup20):
        g, basis, sset, f = setup20
        resid = []
        pocs_reconstruct(g, sample(f, sset.nodes), sset.omega,
                         PocsConfig(kernel="ideal", max_iters=300), basis=basis,
                         callback=lambda i, x: resid.append(np.linalg.norm(x[sset.nodes] - f[sset.nodes])))
        assert resid[-1] < 1e-3 * resid[0]

    def test_solution_is_fixed_point(self, setup20):
        _, basis, sset, f = setup20
        g = f.copy()
        g[sset.nodes] = f[sset.nodes]
        step = apply_exact_filter(basis, ideal_kernel(sset.omega), g)
        np.testing.assert_allclose(step, f, atol=1e-12)

    def test_polynomial_no_worse_than_zero(self, setup20):
        g, _, sset, f = setup20
        res = pocs_reconstruct(g, sample(f, sset.nodes), sset.omega)
        assert res.filter_error > 0
        s = sset.nodes
        assert np.linalg.norm(res.signal[s] - f[s]) <= np.linalg.norm(f[s])

    def test_not_converged_flag(self, setup20):
        g, _, sset, f = setup20
        res = pocs_reconstruct(g, sample(f, sset.nodes), sset.omega,
                               PocsConfig(max_iters=2, stop_tol=1e-15))
        assert not res.converged and res.iterations == 2 and len(res.history) == 2

    def test_deterministic(self, setup20):
        g, _, sset, f = setup20
        a = pocs_reconstruct(g, sample(f, sset.nodes), sset.omega).signal
        b = pocs_reconstruct(g, sample(f, sset.nodes), sset.omega).signal
        np.testing.assert_array_equal(a, b)

    def test_ideal_needs_basis(self, setup20):
        g, _, sset, f = setup20
        with pytest.raises(ValueError, match="spectral basis"):
            pocs_reconstruct(g, sample(f, sset.nodes), sset.omega, PocsConfig(kernel="ideal"))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PocsConfig(stop_tol=0)
        with pytest.raises(ValueError):
            PocsConfig(kernel="butterworth")


class TestSignalFiles:

    def test_signal_roundtrip(self, tmp_path, rng):
        f = rng.standard_normal(7)
        write_signal(f, tmp_path / "f.txt")
        np.testing.assert_array_equal(read_signal(tmp_path / "f.txt"), f)

    def test_sampled_roundtrip(self, tmp_path):
        s = SampledSignal([3, 0], [0.25, -1.5])
        write_sampled_signal(s, tmp_path / "s.txt")
        back = read_sampled_signal(tmp_path / "s.txt")
        np.testing.assert_array_equal(back.nodes, [3, 0])
        np.testing.assert_array_equal(back.values, [0.25, -1.5])

    def test_bad_sampled_line(self, tmp_path):
        p = tmp_path / "s.txt"
        p.write_text("0 1.0\n1\n")
        with pytest.raises(ValueError, match="s.txt:2"):
            read_sampled_signal(p)
