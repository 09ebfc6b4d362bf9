import numpy as np
import pytest
import scipy.sparse as sp

from forest_spectra import GraphError, NegativeWeight, WeightedGraph, graph_scalars, load_graph, sample_neighbor
from forest_spectra.exceptions import GraphFormatError
from forest_spectra.generators import edgeless, star
from forest_spectra.graph import KILL
from forest_spectra.io import load_matrix, write_edgelist, write_matrix

from conftest import dense_laplacian, spectrum, triangle


def _write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConstruction:
    def test_symmetric_storage(self):
        g = WeightedGraph.from_edges(4, [0, 1, 2], [1, 2, 3], [1.0, 2.5, 0.5])
        A = g.adjacency().toarray()
        np.testing.assert_array_equal(A, A.T)
        assert np.all(np.diag(A) == 0)
        np.testing.assert_allclose(g.node_weight, [1.0, 3.5, 3.0, 0.5], rtol=1e-12)
        assert g.m == 3

    def test_duplicates_summed_zero_dropped(self):
        g = WeightedGraph.from_edges(3, [0, 1, 1], [1, 0, 2], [1.0, 2.0, 0.0])
        assert g.m == 1
        assert g.adjacency()[0, 1] == 3.0

    @pytest.mark.parametrize("u,v,w", [([0], [0], [1.0]), ([0], [1], [-1.0]), ([0], [5], [1.0]), ([0], [1], [np.inf])])
    def test_rejects_bad_edges(self, u, v, w):
        with pytest.raises(GraphError):
            WeightedGraph.from_edges(2, u, v, w)

    def test_arrays_read_only(self):
        g = triangle()
        with pytest.raises(ValueError):
            g.weights[0] = 3.0

    def test_dense_laplacian_zero_row_sums(self):
        A = sp.random(30, 30, density=0.2, random_state=1)
        A = A + A.T
        A.setdiag(0)
        g = WeightedGraph.from_adjacency(A)
        L = g.laplacian(dense=True)
        np.testing.assert_allclose(L, L.T)
        np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
        np.testing.assert_allclose(L, dense_laplacian(g), atol=1e-12)


class TestScalars:
    def test_triangle(self):
        s = graph_scalars(triangle())
        assert (s.alpha, s.lambda_bar, s.spectral_upper) == (2.0, 2.0, 4.0)

    def test_star(self):
        s = graph_scalars(star(5000))
        assert s.alpha == 4999
        assert s.lambda_bar == pytest.approx(2 * 4999 / 5000, rel=1e-14)

    def test_edgeless(self):
        s = graph_scalars(edgeless(7))
        assert s.alpha == 0 and s.lambda_bar == 0

    def test_gershgorin_bounds_spectrum(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(2, 60))
            A = sp.random(n, n, density=0.3, random_state=rng).toarray()
            A = np.triu(A, 1)
            A = A + A.T
            delta = rng.random(n) * rng.integers(0, 2)
            g = WeightedGraph.from_adjacency(A, kill_weight=delta)
            lam = spectrum(g)
            s = graph_scalars(g)
            assert lam[-1] <= s.spectral_upper + 1e-9
            assert lam[0] >= -1e-9
            assert s.lambda_bar == pytest.approx(lam.mean(), rel=1e-10, abs=1e-12)


class TestSampler:
    def test_alias_tables_exact(self):
        rng = np.random.default_rng(5)
        n = 40
        A = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.3), 1)
        A = A + A.T
        g = WeightedGraph.from_adjacency(A, kill_weight=rng.random(n) * (rng.random(n) < 0.5))
        for x in range(n):
            if g.total_weight[x] == 0:
                continue
            targets, p = g.sampler.distribution(x)
            want = np.array([g.kill_weight[x] if t == KILL else A[x, t] for t in targets]) / g.total_weight[x]
            np.testing.assert_allclose(p, want, atol=1e-12)

    def test_triangle_symmetric(self):
        draws = sample_neighbor(triangle().sampler, 0, random_state=1, size=20000)
        assert set(np.unique(draws)) == {1, 2}
        frac = np.mean(draws == 1)
        assert abs(frac - 0.5) < 4 * np.sqrt(0.25 / draws.size)

    def test_weighted_binomial(self):
        g = WeightedGraph.from_edges(3, [0, 0], [1, 2], [3.0, 1.0])
        draws = sample_neighbor(g.sampler, 0, random_state=2, size=100_000)
        frac = np.mean(draws == 1)
        assert abs(frac - 0.75) < 4 * np.sqrt(0.75 * 0.25 / draws.size)

    def test_kill_pseudo_arrow(self):
        g = WeightedGraph.from_edges(2, [0], [1], kill_weight=[1.0, 0.0])
        draws = sample_neighbor(g.sampler, 0, random_state=3, size=100_000)
        assert set(np.unique(draws)) == {1, KILL}
        frac = np.mean(draws == KILL)
        assert abs(frac - 0.5) < 4 * np.sqrt(0.25 / draws.size)

    def test_isolated_node_is_contract_violation(self):
        with pytest.raises(GraphError):
            sample_neighbor(edgeless(2).sampler, 0)


class TestEdgeList:
    def test_triangle(self, tmp_path):
        g = load_graph(_write(tmp_path, "0 1 1\n1 2 1\n0 2 1\n"))
        assert g.n == 3
        np.testing.assert_array_equal(g.node_weight, [2, 2, 2])

    def test_declared_n_adds_isolated(self, tmp_path):
        g = load_graph(_write(tmp_path, "n 3\n0 1 1\n"))
        assert g.n == 3
        assert g.node_weight[2] == 0

    def test_negative_weight_line_number(self, tmp_path):
        with pytest.raises(NegativeWeight) as err:
            load_graph(_write(tmp_path, "0 1 -2\n"))
        assert err.value.line == 1

    def test_comments_default_weight_and_labels(self, tmp_path):
        g = load_graph(_write(tmp_path, "# header\n\nalice bob   # trailing\nbob carol 2\n"))
        assert g.n == 3
        assert g.labels == ("alice", "bob", "carol")
        np.testing.assert_array_equal(g.node_weight, [1, 3, 2])

    def test_duplicates_and_delta(self, tmp_path):
        g = load_graph(_write(tmp_path, "0 1 2\n1 0 3\ndelta 1 0.5\ndelta 1 0.25\n"))
        assert g.adjacency()[0, 1] == 5
        np.testing.assert_array_equal(g.kill_weight, [0, 0.75])

    @pytest.mark.parametrize("text,line", [("0 1\n1 1\n", 2), ("0 1 x\n", 1), ("0 1 2 3\n", 1),
                                           ("0 1\nn\n", 2), ("0 1 nan\n", 1)])
    def test_parse_errors(self, tmp_path, text, line):
        with pytest.raises(GraphFormatError) as err:
            load_graph(_write(tmp_path, text))
        assert err.value.line == line

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(8)
        n = 25
        A = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.3), 1)
        g = WeightedGraph.from_adjacency(A + A.T, kill_weight=rng.random(n) * (rng.random(n) < 0.3))
        p = tmp_path / "rt.txt"
        write_edgelist(g, p, comment="round trip")
        h = load_graph(p)
        assert h.n == g.n
        assert (h.adjacency() != g.adjacency()).nnz == 0
        np.testing.assert_array_equal(h.kill_weight, g.kill_weight)


class TestMatrixMarket:
    def test_symmetric_pattern(self, tmp_path):
        text = "%%MatrixMarket matrix coordinate pattern symmetric\n% c\n3 3 3\n2 1\n3 2\n3 1\n"
        g = load_graph(_write(tmp_path, text, "t.mtx"))
        np.testing.assert_array_equal(g.node_weight, [2, 2, 2])

    def test_general_must_be_symmetric(self, tmp_path):
        text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1.0\n"
        with pytest.raises(GraphFormatError):
            load_graph(_write(tmp_path, text, "a.mtx"))

    def test_general_symmetric_accepted(self, tmp_path):
        text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.5\n2 1 1.5\n"
        g = load_graph(_write(tmp_path, text, "a.mtx"))
        assert g.adjacency()[0, 1] == 1.5 and g.m == 1

    @pytest.mark.parametrize("text", [
        "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 2 1\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n2 1 1\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 1\n",
        "2 2 1\n1 2 1\n",
    ])
    def test_rejects(self, tmp_path, text):
        with pytest.raises(GraphFormatError):
            load_graph(_write(tmp_path, text, "bad.mtx"))

    def test_load_matrix_keeps_diagonal_and_signs(self, tmp_path):
        text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 1 -2\n2 2 -3\n"
        M = load_matrix(_write(tmp_path, text, "m.mtx")).toarray()
        np.testing.assert_array_equal(M, [[1, -2], [-2, -3]])

    def test_writer_round_trip(self, tmp_path):
        g = triangle()
        p = tmp_path / "t.mtx"
        write_matrix(g.adjacency(), p)
        h = load_graph(p)
        assert (h.adjacency() != g.adjacency()).nnz == 0
