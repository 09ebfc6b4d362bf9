"""Random and deterministic benchmark graphs.

Every random family takes a ``seed`` (anything accepted by
``numpy.random.default_rng``) and is deterministic given it.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import GraphError
from .graph import WeightedGraph


def _rng(seed):
    return np.random.default_rng(seed)


def _check_p(p, name="p"):
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"{name} must lie in [0, 1], got {p}")


def _check_n(n, least=1):
    if int(n) != n or n < least:
        raise GraphError(f"node count must be an integer >= {least}, got {n}")
    return int(n)


def _sample_indices(rng, total, p):
    """Each of ``range(total)`` independently with probability ``p``."""
    if total == 0 or p == 0.0:
        return np.empty(0, dtype=np.int64)
    if p == 1.0:
        return np.arange(total, dtype=np.int64)
    count = rng.binomial(total, p)
    return np.sort(rng.choice(total, size=count, replace=False)).astype(np.int64)


def _pair_from_index(n, k):
    """Map linear indices over ``{(i, j): i < j < n}`` (row-major) to pairs."""
    i_idx = np.arange(n, dtype=np.int64)
    offsets = i_idx * (2 * n - i_idx - 1) // 2
    i = np.searchsorted(offsets, k, side="right") - 1
    j = k - offsets[i] + i + 1
    return i, j


def er(n, p=None, seed=None) -> WeightedGraph:
    """Erdos-Renyi ``G(n, p)``; ``p`` defaults to ``3 ln(n) / n``."""
    n = _check_n(n)
    if p is None:
        p = min(1.0, 3.0 * math.log(n) / n) if n > 1 else 0.0
    _check_p(p)
    k = _sample_indices(_rng(seed), n * (n - 1) // 2, p)
    u, v = _pair_from_index(n, k)
    return WeightedGraph.from_edges(n, u, v)


def er_mean_degree(n, d, seed=None) -> WeightedGraph:
    """Erdos-Renyi graph with expected degree ``d``."""
    n = _check_n(n, 2)
    if not 0 <= d <= n - 1:
        raise GraphError("mean degree must lie in [0, n - 1]")
    return er(n, d / (n - 1), seed)


def ba(n, m, seed=None) -> WeightedGraph:
    """Barabasi-Albert preferential attachment.

    Starts from a complete graph on ``m + 1`` nodes; every further node
    attaches to ``m`` distinct existing nodes chosen with probability
    proportional to their degree.
    """
    n = _check_n(n)
    if int(m) != m or m < 1 or m >= n:
        raise GraphError("need 1 <= m < n")
    m = int(m)
    rng = _rng(seed)
    us, vs = [], []
    targets = []  # node repeated once per incident edge end
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            us.append(i)
            vs.append(j)
            targets += [i, j]
    for x in range(m + 1, n):
        chosen = set()
        while len(chosen) < m:
            chosen.add(targets[rng.integers(len(targets))])
        for y in sorted(chosen):
            us.append(x)
            vs.append(y)
            targets += [x, y]
    return WeightedGraph.from_edges(n, us, vs)


def sbm(n, communities, p_in, p_out, seed=None) -> WeightedGraph:
    """Stochastic block model with ``communities`` blocks of (nearly) equal size."""
    n = _check_n(n)
    c = _check_n(communities)
    if c > n:
        raise GraphError("more communities than nodes")
    _check_p(p_in, "p_in")
    _check_p(p_out, "p_out")
    rng = _rng(seed)
    sizes = np.full(c, n // c)
    sizes[: n % c] += 1
    starts = np.concatenate([[0], np.cumsum(sizes)])
    us, vs = [], []
    for a in range(c):
        na = sizes[a]
        k = _sample_indices(rng, na * (na - 1) // 2, p_in)
        i, j = _pair_from_index(na, k)
        us.append(i + starts[a])
        vs.append(j + starts[a])
        for b in range(a + 1, c):
            nb = sizes[b]
            k = _sample_indices(rng, na * nb, p_out)
            us.append(k // nb + starts[a])
            vs.append(k % nb + starts[b])
    return WeightedGraph.from_edges(n, np.concatenate(us), np.concatenate(vs))


def sensor(n, k_nearest=5, seed=None) -> WeightedGraph:
    """Uniform points in the unit square, each linked to its ``k`` nearest neighbours."""
    n = _check_n(n, 2)
    if int(k_nearest) != k_nearest or not 1 <= k_nearest < n:
        raise GraphError("need 1 <= k_nearest < n")
    pts = _rng(seed).random((n, 2))
    _, idx = cKDTree(pts).query(pts, k=int(k_nearest) + 1)
    u = np.repeat(np.arange(n), int(k_nearest))
    v = idx[:, 1:].ravel()
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    return WeightedGraph.from_edges(n, pairs[:, 0], pairs[:, 1])


def comet(branches, tail) -> WeightedGraph:
    """Centre joined to ``branches`` leaves and to one path of ``tail`` nodes."""
    branches, tail = int(branches), int(tail)
    if branches < 0 or tail < 0:
        raise GraphError("branch counts must be non-negative")
    n = 1 + branches + tail
    u = [0] * branches + [0] + list(range(branches + 1, n - 1))
    v = list(range(1, branches + 1)) + ([branches + 1] if tail else []) + list(range(branches + 2, n))
    if not tail:
        u = u[:branches]
    return WeightedGraph.from_edges(n, u, v)


def torus(w, h) -> WeightedGraph:
    """``w x h`` periodic grid (4-regular when both sides are at least 3)."""
    w, h = _check_n(w, 3), _check_n(h, 3)
    idx = np.arange(w * h).reshape(h, w)
    right = np.roll(idx, -1, axis=1)
    down = np.roll(idx, -1, axis=0)
    u = np.concatenate([idx.ravel(), idx.ravel()])
    v = np.concatenate([right.ravel(), down.ravel()])
    return WeightedGraph.from_edges(w * h, u, v)


def star(n) -> WeightedGraph:
    """Star ``K_{1, n-1}`` centred at node 0."""
    n = _check_n(n)
    return WeightedGraph.from_edges(n, np.zeros(n - 1, dtype=np.int64), np.arange(1, n))


def path(n) -> WeightedGraph:
    n = _check_n(n)
    return WeightedGraph.from_edges(n, np.arange(n - 1), np.arange(1, n))


def complete(n) -> WeightedGraph:
    n = _check_n(n)
    u, v = np.triu_indices(n, 1)
    return WeightedGraph.from_edges(n, u, v)


def edgeless(n) -> WeightedGraph:
    n = _check_n(n)
    return WeightedGraph.from_edges(n, [], [])


FAMILIES = {
    "er": er,
    "er_mean_degree": er_mean_degree,
    "ba": ba,
    "sbm": sbm,
    "sensor": sensor,
    "comet": comet,
    "torus": torus,
    "star": star,
    "path": path,
    "complete": complete,
    "edgeless": edgeless,
}

_RANDOM = {"er", "er_mean_degree", "ba", "sbm", "sensor"}


def generate_graph(family, seed=None, **params) -> WeightedGraph:
    """Dispatch to a generator by name, e.g. ``generate_graph("er", n=2000, seed=1)``."""
    try:
        fn = FAMILIES[family]
    except KeyError:
        raise GraphError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    if family in _RANDOM:
        params["seed"] = seed
    try:
        return fn(**params)
    except TypeError as exc:
        raise GraphError(f"bad parameters for {family}: {exc}") from None
