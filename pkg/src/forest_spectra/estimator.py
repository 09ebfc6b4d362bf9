"""scikit-learn style front ends.

:class:`SpectralCDFEstimator` fits on one graph (or symmetric matrix) and
predicts its spectral CDF at arbitrary points; :class:`RationalMomentTransformer`
exposes the Monte Carlo moments ``m_k(q)`` as a feature matrix.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .embed import SymmetricMatrix
from .graph import WeightedGraph
from .pipeline import RunConfig, estimate_cdf
from .replicas import estimate_moments
from .validation import check_count, check_fraction, check_grid, check_input, check_positive, check_seed


class SpectralCDFEstimator(BaseEstimator):
    """Estimate the spectral CDF ``F(q) = #{lambda_j <= q} / n`` of ``-L`` or ``-M``.

    Parameters
    ----------
    eps0 : float, default=0.01
        Grid parameter: ``q0 = eps0 * lambda_bar`` and ``ceil(1/eps0) + 1`` rates.
    n_replicas : int, default=4
        Replica forests per group (highest moment order).
    n_groups : int, default=400
        Independent groups of coupled trajectories.
    random_state : int or None, default=0
    matrix_kind : {"adjacency", "generator", "symmetric"}, default="adjacency"
        Interpretation of a raw matrix passed to :meth:`fit`.
    isotonic : bool, default=False
        Also compute a monotone version of the prediction.
    extra_shift : float, default=0.0
        Additional diagonal shift in symmetric mode.
    max_iter : int, default=50
        Newton iteration cap for the maximum-entropy fits.

    Attributes
    ----------
    report_ : SpectralReport
    q_ : ndarray
        Grid abscissae.
    cdf_ : ndarray
        Point estimates on the grid (NaN where none is available).
    lower_, upper_ : ndarray
        Markov bounds on the grid.
    k_valid_ : ndarray
    """

    def __init__(self, eps0=0.01, n_replicas=4, n_groups=400, random_state=0, matrix_kind="adjacency",
                 isotonic=False, extra_shift=0.0, max_iter=50):
        self.eps0 = eps0
        self.n_replicas = n_replicas
        self.n_groups = n_groups
        self.random_state = random_state
        self.matrix_kind = matrix_kind
        self.isotonic = isotonic
        self.extra_shift = extra_shift
        self.max_iter = max_iter

    def _config(self, obj):
        kw = dict(
            eps0=check_fraction(self.eps0, "eps0"),
            l=check_count(self.n_replicas, "n_replicas"),
            s=check_count(self.n_groups, "n_groups", 2),
            base_seed=check_seed(self.random_state),
            isotonic=bool(self.isotonic),
            extra_shift=check_positive(self.extra_shift, "extra_shift", allow_zero=True),
            max_iter=check_count(self.max_iter, "max_iter"),
        )
        if isinstance(obj, SymmetricMatrix):
            return RunConfig(mode="symmetric", matrix=obj, **kw)
        mode = "laplacian" if obj.is_laplacian else "sub-laplacian"
        return RunConfig(mode=mode, graph=obj, **kw)

    def fit(self, X, y=None):
        """Run the estimation on ``X`` (graph or matrix)."""
        obj = check_input(X, self.matrix_kind)
        rep = estimate_cdf(self._config(obj))
        self.report_ = rep
        self.q_ = rep.q
        self.cdf_ = rep.estimate
        self.lower_ = rep.markov_lower
        self.upper_ = rep.markov_upper
        self.k_valid_ = rep.k_valid
        self.n_nodes_ = obj.n
        return self

    def predict(self, q):
        """Interpolated CDF estimate at ``q``.

        Below the grid the value is NaN (or 0 for ``q < 0`` on graphs, whose
        spectrum is non-negative); above it, 1.
        """
        check_is_fitted(self, "report_")
        q = np.asarray(q, dtype=float)
        ok = np.isfinite(self.cdf_)
        out = np.full(q.shape, np.nan)
        if ok.any():
            inside = (q >= self.q_[0]) & (q <= self.q_[-1])
            out[inside] = np.interp(q[inside], self.q_[ok], self.cdf_[ok])
        out[q > self.q_[-1]] = 1.0
        if self.report_.metadata.get("kind") != "symmetric":
            out[q < 0] = 0.0
        return out

    def predict_bounds(self, q):
        """Bounds at ``q`` from the grid bounds and monotonicity of ``F``.

        ``F(q) >= lower(q_i)`` for the largest grid point ``q_i <= q`` and
        ``F(q) <= upper(q_j)`` for the smallest ``q_j >= q``.
        """
        check_is_fitted(self, "report_")
        q = np.atleast_1d(np.asarray(q, dtype=float))
        i = np.searchsorted(self.q_, q, side="right") - 1
        j = np.searchsorted(self.q_, q, side="left")
        lo = np.where(i >= 0, self.lower_[np.clip(i, 0, None)], 0.0)
        hi = np.where(j < self.q_.size, self.upper_[np.clip(j, None, self.q_.size - 1)], 1.0)
        return lo, hi


class RationalMomentTransformer(TransformerMixin, BaseEstimator):
    """Monte Carlo estimates of ``m_k(q) = (1/n) sum_j (q / (q + lambda_j))**k``.

    Parameters
    ----------
    q : array_like
        Positive rates.
    n_replicas : int, default=4
    n_groups : int, default=400
    random_state : int or None, default=0
    matrix_kind : {"adjacency", "generator"}, default="adjacency"

    ``transform`` returns an array of shape ``(len(q), n_replicas)``;
    ``stderr_`` holds the matching standard errors after fitting.
    """

    def __init__(self, q=(1.0,), n_replicas=4, n_groups=400, random_state=0, matrix_kind="adjacency"):
        self.q = q
        self.n_replicas = n_replicas
        self.n_groups = n_groups
        self.random_state = random_state
        self.matrix_kind = matrix_kind

    def fit(self, X, y=None):
        g = check_input(X, self.matrix_kind)
        if not isinstance(g, WeightedGraph):
            raise TypeError("moments need a graph or sub-Laplacian input")
        est = estimate_moments(
            g, check_grid(self.q, "q"), l=check_count(self.n_replicas, "n_replicas"),
            s=check_count(self.n_groups, "n_groups", 2), base_seed=check_seed(self.random_state),
        )
        self.estimates_ = est
        self.q_ = est.q
        self.moments_ = est.mean
        self.stderr_ = est.stderr
        return self

    def transform(self, X=None):
        check_is_fitted(self, "moments_")
        return self.moments_.copy()
