"""Reduction of real symmetric matrices to sub-Laplacian spectral problems.

A symmetric ``M`` is first shifted to ``M' = M - c Id`` so that every row
satisfies ``M'(x, x) <= -sum_{y != x} |M'(x, y)|``.  The double cover then
builds two sub-Laplacians: ``L1`` with off-diagonal entries ``|M'(x, y)|``
on ``n`` nodes, and ``L2`` on ``2n`` nodes whose spectrum is the union of
the spectra of ``L1`` (even vectors ``(v, v)``) and ``M'`` (odd vectors
``(v, -v)``).  Hence ``F = 2 F_2 - F_1`` for the spectral CDFs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import GraphError
from .graph import WeightedGraph


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Sparse real symmetric matrix (CSR)."""

    matrix: sp.csr_matrix

    def __post_init__(self):
        A = sp.csr_matrix(self.matrix, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise GraphError("matrix must be square")
        if A.nnz and not np.all(np.isfinite(A.data)):
            raise GraphError("matrix entries must be finite")
        scale = max(1.0, abs(A).max()) if A.nnz else 1.0
        if A.nnz and abs(A - A.T).max() > 1e-12 * scale:
            raise GraphError("matrix must be symmetric")
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        object.__setattr__(self, "matrix", A)

    @classmethod
    def from_dense(cls, M):
        return cls(sp.csr_matrix(np.asarray(M, dtype=float)))

    @property
    def n(self):
        return self.matrix.shape[0]

    def toarray(self):
        return self.matrix.toarray()

    def _offdiag(self):
        return self.matrix - sp.diags(self.matrix.diagonal())


def _as_symmetric(M):
    return M if isinstance(M, SymmetricMatrix) else SymmetricMatrix(sp.csr_matrix(M))


def dominance_shift(M) -> float:
    """``max(0, max_x (M(x, x) + sum_{y != x} |M(x, y)|))``."""
    M = _as_symmetric(M)
    if M.n == 0:
        return 0.0
    off = np.asarray(abs(M._offdiag()).sum(axis=1)).ravel()
    return float(max(0.0, np.max(M.matrix.diagonal() + off)))


def shift_to_dominant(M, extra=0.0):
    """Smallest diagonal shift restoring ``M'(x,x) <= -sum_y |M'(x,y)|``.

    Parameters
    ----------
    M : SymmetricMatrix or matrix-like
    extra : float
        Additional non-negative shift for a spectral margin.

    Returns
    -------
    M_shifted : SymmetricMatrix
        ``M - c Id``.
    c : float
    """
    if extra < 0:
        raise ValueError("extra shift must be non-negative")
    M = _as_symmetric(M)
    c = dominance_shift(M) + float(extra)
    if c == 0.0:
        return M, 0.0
    return SymmetricMatrix(M.matrix - c * sp.identity(M.n, format="csr")), c


def _dominance_slack(M: SymmetricMatrix):
    off = np.asarray(abs(M._offdiag()).sum(axis=1)).ravel()
    return -M.matrix.diagonal() - off


def make_sub_laplacian(M) -> WeightedGraph:
    """Graph with ``w(x, y) = M(x, y)`` and ``delta(x) = -M(x, x) - sum_y M(x, y)``.

    Raises
    ------
    GraphError
        If an off-diagonal entry is negative or a row is not dominated.
    """
    M = _as_symmetric(M)
    off = M._offdiag().tocsr()
    off.eliminate_zeros()
    if off.nnz and off.data.min() < 0:
        raise GraphError("off-diagonal entries must be non-negative")
    delta = _dominance_slack(M)
    scale = np.maximum(1.0, np.abs(M.matrix.diagonal()))
    if np.any(delta < -1e-12 * scale):
        raise GraphError("matrix is not diagonally dominant with non-positive diagonal")
    return WeightedGraph.from_adjacency(off, kill_weight=np.maximum(delta, 0.0))


def matrix_of(g: WeightedGraph) -> SymmetricMatrix:
    """The generator ``L = A - diag(w + delta)`` as a :class:`SymmetricMatrix`."""
    return SymmetricMatrix(g.laplacian())


@dataclass(frozen=True, eq=False)
class CoverPair:
    """Sub-Laplacians of the double cover of a dominant matrix.

    ``L1`` lives on ``n`` nodes, ``L2`` on ``2n`` (node ``x + n`` is the
    mirror of ``x``).  ``shift`` is the constant removed from the diagonal
    of the user's matrix to reach dominance.
    """

    L1: WeightedGraph
    L2: WeightedGraph
    shift: float = 0.0

    @property
    def n(self):
        return self.L1.n


def double_cover(M, shift=0.0) -> CoverPair:
    """Build ``(L1, L2)`` from a dominant ``M'``.

    Parameters
    ----------
    M : SymmetricMatrix or matrix-like
        Must satisfy ``M(x, x) <= -sum_{y != x} |M(x, y)|``.
    shift : float
        Recorded in the result for mapping abscissae back.
    """
    M = _as_symmetric(M)
    n = M.n
    delta = _dominance_slack(M)
    scale = np.maximum(1.0, np.abs(M.matrix.diagonal()))
    if np.any(delta < -1e-12 * scale):
        raise GraphError("double cover needs a diagonally dominant matrix with non-positive diagonal")
    delta = np.maximum(delta, 0.0)
    off = M._offdiag().tocsr()
    off.eliminate_zeros()
    pos = off.maximum(0)
    neg = (-off).maximum(0)
    L1 = WeightedGraph.from_adjacency(abs(off), kill_weight=delta)
    A2 = sp.bmat([[pos, neg], [neg, pos]], format="csr")
    L2 = WeightedGraph.from_adjacency(A2, kill_weight=np.concatenate([delta, delta]))
    return CoverPair(L1=L1, L2=L2, shift=float(shift))


def embed(M, extra_shift=0.0) -> CoverPair:
    """Shift ``M`` to dominance and build its double cover."""
    Ms, c = shift_to_dominant(M, extra_shift)
    return double_cover(Ms, shift=c)


@dataclass(frozen=True)
class TabulatedCDF:
    """CDF values ``F`` at abscissae ``q`` (non-decreasing)."""

    q: np.ndarray
    F: np.ndarray


@dataclass(frozen=True)
class CombinedCDF:
    """Result of :func:`combine_cdfs` on the abscissae of ``-M``.

    ``F`` is clamped to ``[0, 1]`` (and monotonised when requested);
    ``raw`` is the unprocessed ``2 F_2 - F_1``.
    """

    q: np.ndarray
    F: np.ndarray
    raw: np.ndarray
    isotonic: bool


def combine_cdfs(F1, F2, c=0.0, isotonic=False) -> CombinedCDF:
    """``F = clamp(2 F_2 - F_1, 0, 1)`` reported at ``q - c``.

    Parameters
    ----------
    F1, F2 : TabulatedCDF
        CDFs of ``-L1`` and ``-L2`` on a common grid.
    c : float
        Diagonal shift, see :func:`shift_to_dominant`.
    isotonic : bool
        Apply a non-decreasing least-squares fit after clamping.
    """
    q1, q2 = np.asarray(F1.q, dtype=float), np.asarray(F2.q, dtype=float)
    if q1.shape != q2.shape or not np.allclose(q1, q2, rtol=1e-12, atol=0.0):
        raise ValueError("F1 and F2 must be tabulated on the same grid")
    raw = 2.0 * np.asarray(F2.F, dtype=float) - np.asarray(F1.F, dtype=float)
    F = np.clip(raw, 0.0, 1.0)
    if isotonic:
        F = monotone_fit(q1, F)
    return CombinedCDF(q=q1 - c, F=F, raw=raw, isotonic=bool(isotonic))


def monotone_fit(q, y):
    """Non-decreasing least-squares fit of ``y`` against ``q``, clipped to ``[0, 1]``.

    NaN entries are left in place and ignored by the fit.
    """
    from sklearn.isotonic import IsotonicRegression

    y = np.asarray(y, dtype=float)
    out = y.copy()
    ok = np.isfinite(y)
    if ok.sum() >= 2:
        reg = IsotonicRegression(increasing=True, y_min=0.0, y_max=1.0)
        out[ok] = reg.fit_transform(np.asarray(q, dtype=float)[ok], y[ok])
    return out
