"""Weighted graphs, their Laplacian scalars and O(1) neighbour sampling."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .exceptions import GraphError

KILL = _kernels.KILL


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with non-negative symmetric weights in CSR form.

    Both orientations of every edge are stored.  ``kill_weight`` is the
    per-node killing rate of a sub-Laplacian (zero for a true Laplacian).

    Use :meth:`from_edges` or :meth:`from_adjacency` rather than the raw
    constructor; they sum duplicates, drop explicit zeros and validate.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    kill_weight: np.ndarray
    labels: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("indptr", "indices", "weights", "kill_weight"):
            getattr(self, name).setflags(write=False)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, n, u, v, w=None, kill_weight=None, labels=None):
        """Build from an edge list; each pair is one undirected edge.

        Duplicate pairs are summed, zero weights dropped.
        """
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if w is None:
            w = np.ones(u.shape[0])
        w = np.asarray(w, dtype=float).ravel()
        if not (u.shape == v.shape == w.shape):
            raise GraphError("edge arrays must have equal length")
        if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
            raise GraphError(f"node ids must lie in [0, {n})")
        if np.any(u == v):
            raise GraphError("self-loops are not allowed")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise GraphError("edge weights must be finite and non-negative")
        A = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n, n),
        ).tocsr()
        return cls._from_csr(A, kill_weight, labels)

    @classmethod
    def from_adjacency(cls, A, kill_weight=None, labels=None):
        """Build from a symmetric (sparse or dense) weight matrix."""
        A = sp.csr_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise GraphError("adjacency matrix must be square")
        if A.diagonal().any():
            raise GraphError("self-loops are not allowed")
        if A.nnz and (not np.all(np.isfinite(A.data)) or A.data.min() < 0):
            raise GraphError("edge weights must be finite and non-negative")
        if abs(A - A.T).max() > 1e-12 * max(1.0, abs(A).max()):
            raise GraphError("adjacency matrix must be symmetric")
        return cls._from_csr(A, kill_weight, labels)

    @classmethod
    def _from_csr(cls, A, kill_weight, labels):
        A = sp.csr_matrix(A)
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        n = A.shape[0]
        if kill_weight is None:
            kill = np.zeros(n)
        else:
            kill = np.array(kill_weight, dtype=float).ravel()
            if kill.shape != (n,):
                raise GraphError("kill_weight must have one entry per node")
            if not np.all(np.isfinite(kill)) or np.any(kill < 0):
                raise GraphError("kill weights must be finite and non-negative")
        return cls(
            n=n,
            indptr=A.indptr.astype(np.int64),
            indices=A.indices.astype(np.int64),
            weights=A.data.astype(float),
            kill_weight=kill,
            labels=None if labels is None else tuple(labels),
        )

    # -- derived quantities ---------------------------------------------

    @cached_property
    def node_weight(self):
        """Total incident edge weight ``w(x)`` (the degree when unweighted)."""
        w = np.asarray(self.adjacency().sum(axis=1), dtype=float).ravel()
        w.setflags(write=False)
        return w

    @property
    def total_weight(self):
        """``w(x) + delta(x)``: the rate at which a walk leaves ``x``."""
        return self.node_weight + self.kill_weight

    @property
    def m(self):
        return self.indices.size // 2

    @property
    def is_laplacian(self):
        return not np.any(self.kill_weight > 0)

    def adjacency(self):
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))

    def laplacian(self, dense=False):
        """The (negative semi-definite) generator ``L = A - diag(w + delta)``."""
        L = self.adjacency() - sp.diags(self.total_weight)
        return L.toarray() if dense else L.tocsr()

    def edges(self):
        """Upper-triangle edge list ``(u, v, w)``."""
        A = sp.triu(self.adjacency(), k=1).tocoo()
        return A.row.astype(np.int64), A.col.astype(np.int64), A.data

    def fingerprint(self):
        h = hashlib.sha256()
        for arr in (self.indptr, self.indices, self.weights, self.kill_weight):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]

    @cached_property
    def sampler(self):
        return NeighborSampler(self)

    def __repr__(self):
        kind = "laplacian" if self.is_laplacian else "sub-laplacian"
        return f"WeightedGraph(n={self.n}, m={self.m}, {kind})"


@dataclass(frozen=True)
class GraphScalars:
    alpha: float
    lambda_bar: float
    spectral_upper: float


def graph_scalars(g: WeightedGraph) -> GraphScalars:
    """Maximal node weight, mean eigenvalue of ``-L`` and a Gershgorin bound.

    In the sub-Laplacian case row ``x`` of ``-L`` has diagonal ``w(x) + delta(x)``
    and off-diagonal mass ``w(x)``, so every eigenvalue is at most
    ``max_x (2 w(x) + delta(x))``; this reduces to ``2 alpha`` for Laplacians.
    """
    if g.n == 0:
        return GraphScalars(0.0, 0.0, 0.0)
    w = g.node_weight
    alpha = float(w.max())
    lambda_bar = float((w + g.kill_weight).sum() / g.n)
    upper = float((2.0 * w + g.kill_weight).max())
    return GraphScalars(alpha=alpha, lambda_bar=lambda_bar, spectral_upper=upper)


class NeighborSampler:
    """Per-node alias tables over outgoing weights plus a killing slot.

    Node ``x`` owns slots ``ptr[x]:ptr[x+1]``; ``target`` holds the
    neighbour id or ``KILL`` for the pseudo-arrow of weight ``delta(x)``.
    """

    def __init__(self, g: WeightedGraph):
        n = g.n
        deg = np.diff(g.indptr)
        has_kill = (g.kill_weight > 0).astype(np.int64)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg + has_kill, out=ptr[1:])
        target = np.empty(ptr[-1], dtype=np.int64)
        slot_weight = np.empty(ptr[-1])
        # edges keep their CSR order, the kill slot goes last
        edge_slot = np.repeat(ptr[:-1] - g.indptr[:-1], deg) + np.arange(g.indices.size)
        target[edge_slot] = g.indices
        slot_weight[edge_slot] = g.weights
        kill_nodes = np.flatnonzero(has_kill)
        target[ptr[kill_nodes + 1] - 1] = KILL
        slot_weight[ptr[kill_nodes + 1] - 1] = g.kill_weight[kill_nodes]
        prob, alias = _kernels.build_alias_tables(ptr, slot_weight)
        self.ptr = ptr
        self.target = target
        self.prob = prob
        self.alias = alias
        self.slot_weight = slot_weight
        self.w_tot = np.ascontiguousarray(g.total_weight, dtype=float)
        for arr in (self.ptr, self.target, self.prob, self.alias, self.slot_weight, self.w_tot):
            arr.setflags(write=False)

    @property
    def arrays(self):
        return self.w_tot, self.ptr, self.target, self.prob, self.alias

    def distribution(self, x):
        """Categorical law encoded by the alias table of ``x``.

        Returns ``(targets, probabilities)`` over the node's slots.
        """
        lo, hi = self.ptr[x], self.ptr[x + 1]
        d = hi - lo
        if d == 0:
            raise GraphError(f"node {x} has no outgoing weight")
        p = self.prob[lo:hi] / d
        for j in range(d):
            p[self.alias[lo + j]] += (1.0 - self.prob[lo + j]) / d
        return self.target[lo:hi].copy(), p


def sample_neighbor(sampler: NeighborSampler, x: int, random_state=None, size=None):
    """Draw the successor of ``x``: a neighbour, or ``KILL`` (= -2).

    ``y`` is returned with probability ``w(x, y) / (w(x) + delta(x))``.
    With ``size`` given, returns an array of independent draws.
    """
    from .forest import stream_seed

    if sampler.ptr[x + 1] == sampler.ptr[x]:
        raise GraphError(f"node {x} has no outgoing weight")
    count = 1 if size is None else int(size)
    draws = _kernels.sample_successor_batch(
        int(x), count, stream_seed(random_state), sampler.ptr, sampler.target, sampler.prob, sampler.alias
    )
    return int(draws[0]) if size is None else draws
