import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from forest_spectra import WeightedGraph, estimate_moments, group_variance_check, make_grid, xi_sizes
from forest_spectra.generators import edgeless, er

from conftest import dense_laplacian, k2, triangle


def trace_moments(g, q, l):
    """``(1/n) Tr(K_q^k)`` with ``K_q = q (q Id - L)^-1`` from a dense inverse."""
    L = dense_laplacian(g)
    out = np.empty((len(q), l))
    for i, qq in enumerate(q):
        K = qq * np.linalg.inv(qq * np.eye(g.n) - L)
        P = np.eye(g.n)
        for k in range(l):
            P = P @ K
            out[i, k] = np.trace(P) / g.n
    return out


class TestGrid:
    def test_decade_grid(self):
        np.testing.assert_allclose(make_grid(1.0, 50.0, 0.5).q_values, [1, 10, 100], rtol=1e-12)

    def test_default_size(self):
        grid = make_grid(0.3, 40.0, 0.01)
        assert len(grid) == 101
        assert grid.q_values[-1] == pytest.approx(80.0, rel=1e-9)
        assert np.all(np.diff(grid.q_values) > 0)
        assert grid.ratio == pytest.approx(math.exp(0.01 * math.log(80.0 / 0.3)), rel=1e-12)

    def test_single_step(self):
        np.testing.assert_allclose(make_grid(2 * 8.0 / 4, 8.0, 1.0).q_values, [4.0, 16.0])

    @pytest.mark.parametrize("q0,alpha,eps0", [(20.0, 10.0, 0.1), (1.0, 10.0, 0.0), (1.0, 10.0, 1.5), (0.0, 1.0, 0.1)])
    def test_rejects(self, q0, alpha, eps0):
        with pytest.raises(ValueError):
            make_grid(q0, alpha, eps0)


class TestXiSizes:
    def test_identity_maps(self):
        roots = np.tile(np.arange(6), (4, 1))
        np.testing.assert_array_equal(xi_sizes(roots), [6, 6, 6, 6])

    def test_single_replica_counts_roots(self):
        roots = np.array([[0, 0, 2, 2, 4]])
        assert xi_sizes(roots).tolist() == [3]

    def test_hand_composition(self):
        roots = np.array([[0, 0, 2], [0, 1, 1]])
        # R^1 = (0, 0, 2); R^2 = roots2[R^1] = (0, 0, 1)
        assert xi_sizes(roots).tolist() == [2, 1]

    def test_killed_chains_excluded(self):
        roots = np.array([[0, 0, 2], [0, 1, 1]])
        killed = np.array([[False, False, False], [True, True, False]])
        assert xi_sizes(roots, killed).tolist() == [2, 0]

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            xi_sizes(np.zeros(3, dtype=int))
        with pytest.raises(ValueError):
            xi_sizes(np.zeros((2, 3), dtype=int), np.zeros((2, 2), dtype=bool))


class TestEstimateMoments:
    def test_edgeless_exact(self):
        est = estimate_moments(edgeless(10), [0.5, 1.0], l=3, s=5, base_seed=1)
        np.testing.assert_array_equal(est.mean, 1.0)
        np.testing.assert_array_equal(est.stderr, 0.0)

    def test_k2_first_moment(self):
        est = estimate_moments(k2(), [2.0], l=1, s=20_000, base_seed=2)
        assert abs(est.mean[0, 0] - 0.75) <= 4 * est.stderr[0, 0]

    def test_triangle_second_replica(self):
        est = estimate_moments(triangle(), [3.0], l=2, s=50_000, base_seed=3)
        xi2 = est.counts[:, 0, 1]
        assert abs(xi2.mean() - 1.5) <= 4 * xi2.std(ddof=1) / math.sqrt(xi2.size)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_unbiased_against_trace(self, seed):
        g = er(60, 0.1, seed=seed)
        # below ~lambda_bar/20 every group sees the same count and the
        # standard error collapses to zero, which a z-test cannot handle
        q = make_grid(0.3, g.node_weight.max(), 0.25).q_values
        est = estimate_moments(g, q, l=4, s=3000, base_seed=seed)
        truth = trace_moments(g, q, 4)
        assert np.all(np.abs(est.mean - truth) <= 4 * est.stderr + 1e-12)

    def test_sub_laplacian_unbiased(self):
        g = WeightedGraph.from_edges(5, [0, 1, 2, 3], [1, 2, 3, 4], kill_weight=[0.5, 0, 0, 0, 1.5])
        q = [0.2, 1.0, 4.0]
        est = estimate_moments(g, q, l=3, s=20_000, base_seed=5)
        truth = trace_moments(g, q, 3)
        assert np.all(np.abs(est.mean - truth) <= 4 * est.stderr)

    def test_relative_error_scaling(self):
        g = er(150, 0.06, seed=4)
        lam_bar = g.node_weight.mean()
        q = make_grid(lam_bar / 100, g.node_weight.max(), 0.2).q_values
        est = estimate_moments(g, q, l=4, s=400, base_seed=4)
        rel = est.stderr / est.mean
        assert np.all(rel <= 3.0 / np.sqrt(est.s * est.n * est.mean))

    def test_monotone_in_k_and_q(self):
        g = er(100, 0.08, seed=6)
        q = make_grid(0.1, g.node_weight.max(), 0.2).q_values
        est = estimate_moments(g, q, l=4, s=400, base_seed=6)
        slack = 4 * np.hypot(est.stderr[:, 1:], est.stderr[:, :-1])
        assert np.all(est.mean[:, 1:] <= est.mean[:, :-1] + slack)
        slack_q = 4 * np.hypot(est.stderr[1:], est.stderr[:-1])
        assert np.all(est.mean[1:] >= est.mean[:-1] - slack_q)
        assert np.all((est.mean >= 0) & (est.mean <= 1))

    def test_deterministic_across_chunking(self):
        g = er(50, 0.1, seed=7)
        a = estimate_moments(g, [0.5, 2.0], l=3, s=100, base_seed=11, chunk=256)
        b = estimate_moments(g, [0.5, 2.0], l=3, s=100, base_seed=11, chunk=7)
        np.testing.assert_array_equal(a.counts, b.counts)
        np.testing.assert_array_equal(a.mean, b.mean)
        c = estimate_moments(g, [0.5, 2.0], l=3, s=100, base_seed=12)
        assert not np.array_equal(a.counts, c.counts)

    @pytest.mark.parametrize("kw", [dict(l=0), dict(s=1), dict(grid=[0.0, 1.0])])
    def test_rejects(self, kw):
        args = dict(grid=[1.0], l=2, s=4)
        args.update(kw)
        with pytest.raises(ValueError):
            estimate_moments(k2(), args.pop("grid"), **args)

    def test_csv(self, tmp_path):
        est = estimate_moments(k2(), [1.0, 2.0], l=2, s=10, base_seed=0)
        p = tmp_path / "moments.csv"
        est.to_csv(p)
        rows = list(csv.reader(open(p)))
        assert rows[0] == ["q", "k", "mean", "stderr", "s", "l"]
        assert len(rows) == 1 + 2 * 2
        assert float(rows[4][2]) == est.mean[1, 1]


class TestVarianceCheck:
    def test_edgeless(self):
        rep = group_variance_check(estimate_moments(edgeless(4), [1.0], l=2, s=40))
        assert rep.ok

    def test_triangle(self):
        rep = group_variance_check(estimate_moments(triangle(), [3.0], l=1, s=10_000, base_seed=1))
        assert rep.ok
        assert rep.ratio[0, 0] <= 1.2

    def test_flags_overdispersion(self):
        est = estimate_moments(triangle(), [3.0], l=1, s=40, base_seed=1)
        counts = np.zeros_like(est.counts)
        counts[::2] = 10
        rep = group_variance_check(replace(est, counts=counts))
        assert rep.violations and rep.violations[0][:2] == (3.0, 1)

    def test_needs_thirty_groups(self):
        with pytest.raises(ValueError):
            group_variance_check(estimate_moments(triangle(), [3.0], l=1, s=10))
