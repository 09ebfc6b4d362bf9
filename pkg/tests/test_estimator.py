import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from forest_spectra import RationalMomentTransformer, SpectralCDFEstimator
from forest_spectra.generators import er

from conftest import spectrum, triangle


class TestSpectralCDFEstimator:
    def test_params_round_trip(self):
        est = SpectralCDFEstimator(eps0=0.1, n_groups=50)
        params = est.get_params()
        assert params["eps0"] == 0.1 and params["n_groups"] == 50 and params["n_replicas"] == 4
        est.set_params(random_state=7)
        twin = clone(est)
        assert twin.get_params() == est.get_params()
        assert not hasattr(twin, "report_")

    def test_fit_predict(self):
        g = er(80, 0.1, seed=1)
        est = SpectralCDFEstimator(eps0=0.1, n_groups=200).fit(g)
        assert est.q_.shape == est.cdf_.shape == est.lower_.shape
        q = np.linspace(0, est.q_[-1], 9)
        pred = est.predict(q)
        assert pred.shape == q.shape
        fin = np.isfinite(pred)
        assert np.all((pred[fin] >= 0) & (pred[fin] <= 1))
        assert est.predict([-1.0])[0] == 0.0
        assert est.predict([est.q_[-1] * 2])[0] == 1.0

    def test_predict_bounds_contain_truth(self):
        g = er(60, 0.12, seed=2)
        est = SpectralCDFEstimator(eps0=0.1, n_groups=300).fit(g)
        lam = spectrum(g)
        q = np.linspace(est.q_[0], est.q_[-1], 25)
        lo, hi = est.predict_bounds(q)
        truth = np.array([np.mean(lam <= t + 1e-12) for t in q])
        assert np.all(lo <= hi)
        assert np.mean((truth >= lo - 1e-9) & (truth <= hi + 1e-9)) >= 0.9

    def test_dense_adjacency_and_symmetric(self):
        A = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
        a = SpectralCDFEstimator(eps0=0.25, n_groups=40).fit(A)
        b = SpectralCDFEstimator(eps0=0.25, n_groups=40).fit(triangle())
        np.testing.assert_array_equal(a.cdf_, b.cdf_)
        c = SpectralCDFEstimator(eps0=0.25, n_groups=40, matrix_kind="symmetric").fit(-A)
        assert c.report_.metadata["kind"] == "symmetric"

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            SpectralCDFEstimator().predict([1.0])

    @pytest.mark.parametrize("kw,err", [(dict(eps0=2.0), ValueError), (dict(n_groups=1), ValueError),
                                        (dict(n_replicas=1.5), TypeError), (dict(random_state="x"), TypeError)])
    def test_bad_params(self, kw, err):
        with pytest.raises(err):
            SpectralCDFEstimator(**kw).fit(triangle())


class TestRationalMomentTransformer:
    def test_transform_shape_and_values(self):
        g = er(50, 0.15, seed=3)
        q = [0.5, 2.0, 8.0]
        tr = RationalMomentTransformer(q=q, n_replicas=3, n_groups=2000)
        X = tr.fit_transform(g)
        assert X.shape == (3, 3)
        lam = spectrum(g)
        truth = np.array([[np.mean((t / (t + lam)) ** k) for k in (1, 2, 3)] for t in q])
        assert np.all(np.abs(X - truth) <= 4 * tr.stderr_ + 1e-12)

    def test_rejects_symmetric(self):
        with pytest.raises(TypeError):
            RationalMomentTransformer(matrix_kind="symmetric").fit(-np.eye(2))

    def test_clone(self):
        tr = RationalMomentTransformer(q=(1.0, 2.0), n_groups=10)
        assert clone(tr).get_params()["q"] == (1.0, 2.0)
