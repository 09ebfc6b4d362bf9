"""Kirchhoff forests: single-rate Wilson sampling and coupled trajectories.

A Kirchhoff forest with rate ``q`` is a random rooted spanning forest drawn
with probability proportional to ``q**(#roots) * prod(edge weights)``.
Coupled trajectories realise all rates in ``[q_min, q_max]`` at once from a
shared stack of (mark, arrow) pairs, rebuilding only the tree whose root
unfreezes when the rate decreases past that root's mark threshold.

Random streams
--------------
Compiled code draws from numba's Mersenne Twister, which takes a 32-bit
seed.  ``stream_seed`` turns ``None``, an int or a ``numpy.random.Generator``
into such a seed; ``group_seeds(base_seed, count)`` derives the seed of
group ``i`` as ``SeedSequence([base_seed, i]).generate_state(1)[0]``.  The
replicas of a group are drawn one after the other from that group's stream,
so results depend only on ``(base_seed, i)``, never on scheduling.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import OracleSizeError
from .graph import WeightedGraph, graph_scalars

NONE = _kernels.NONE
MARK_ROOT = _kernels.MARK_ROOT
KILL_ROOT = _kernels.KILL_ROOT


def stream_seed(random_state=None) -> int:
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**32))
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(0, 2**32, dtype=np.uint64))
    return int(np.random.SeedSequence(random_state).generate_state(1)[0])


def group_seeds(base_seed, count, start=0) -> np.ndarray:
    return np.array(
        [np.random.SeedSequence([int(base_seed), i]).generate_state(1)[0] for i in range(start, start + count)],
        dtype=np.uint32,
    )


def decode_roots(encoded):
    """Split a signed root array into ``(root ids, killed mask)``."""
    encoded = np.asarray(encoded)
    killed = encoded < 0
    return np.where(killed, -encoded - 1, encoded).astype(np.int64), killed


@dataclass(frozen=True, eq=False)
class Forest:
    """Rooted spanning forest as a successor map.

    ``next[x]`` is the node ``x`` points to, or ``NONE`` (-1) when ``x`` is
    a root; ``root_kind[x]`` tells MARK roots from KILL roots (the latter
    only arise with killing weights).
    """

    next: np.ndarray
    root_kind: np.ndarray
    _roots: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.next.shape[0]

    @property
    def roots(self):
        return np.flatnonzero(self.next == NONE)

    @property
    def mark_roots(self):
        return np.flatnonzero((self.next == NONE) & (self.root_kind == MARK_ROOT))

    def root_map(self):
        if self._roots is None:
            out = np.empty(self.n, dtype=np.int32)
            _kernels.root_array(self.next, self.root_kind.astype(np.int8), out, np.empty(self.n, dtype=np.int64))
            object.__setattr__(self, "_roots", decode_roots(out)[0])
        return self._roots

    def arrows(self):
        x = np.flatnonzero(self.next != NONE)
        return list(zip(x.tolist(), self.next[x].tolist()))


def root_of(f: Forest, x: int) -> int:
    """Root of the tree containing ``x`` (flat array, path-compressed once)."""
    return int(f.root_map()[x])


def audit_forest(next_map) -> None:
    """Raise ``AssertionError`` unless ``next_map`` is a valid rooted forest."""
    nxt = np.asarray(next_map)
    n = nxt.shape[0]
    assert np.all((nxt == NONE) | ((nxt >= 0) & (nxt < n))), "successor out of range"
    assert not np.any(nxt == np.arange(n)), "self-loop"
    state = np.zeros(n, dtype=np.int8)  # 0 unseen, 1 on path, 2 done
    for x in range(n):
        path = []
        u = x
        while u != NONE and state[u] == 0:
            state[u] = 1
            path.append(u)
            u = nxt[u]
        assert u == NONE or state[u] == 2, f"cycle through node {u}"
        for y in path:
            state[y] = 2


@dataclass(frozen=True)
class UnfreezeQueue:
    """MARK roots with the rate below which each one unfreezes.

    Entries are kept in pop order: non-increasing threshold, ties to the
    smaller node id.
    """

    thresholds: np.ndarray
    nodes: np.ndarray

    @classmethod
    def from_arrays(cls, thresholds, nodes):
        order = np.lexsort((nodes, -thresholds))
        return cls(np.asarray(thresholds)[order], np.asarray(nodes)[order])

    def __len__(self):
        return self.nodes.shape[0]

    def __iter__(self):
        return zip(self.thresholds.tolist(), self.nodes.tolist())


@dataclass(frozen=True)
class CostStats:
    S: int
    R: int


def wilson_sample(g: WeightedGraph, q: float, random_state=None):
    """Kirchhoff forest at rate ``q`` by Wilson's algorithm.

    Walks start from nodes ``0, 1, ...`` in turn.  At each read of a node's
    stack a uniform mark ``U`` decides between stopping (``U <= q/(q + w(x)
    + delta(x))``) and following a random arrow; stopping nodes become MARK
    roots and enter the queue with threshold ``U (w(x) + delta(x)) / (1 - U)``.
    A killing arrow makes a KILL root, which never unfreezes.

    Returns
    -------
    forest : Forest
    queue : UnfreezeQueue
    cost : CostStats
    """
    if not q > 0:
        raise ValueError("rate q must be positive")
    nexts, kinds, thr, costs = wilson_forests(g, q, 1, random_state)
    roots = np.flatnonzero(~np.isnan(thr[0]))
    return (Forest(nexts[0], kinds[0]), UnfreezeQueue.from_arrays(thr[0, roots], roots),
            CostStats(int(costs[0, 0]), int(costs[0, 1])))


def wilson_forests(g: WeightedGraph, q: float, count: int, random_state=None):
    """``count`` independent Wilson forests from a single stream.

    Returns raw arrays ``(next, root_kind, thresholds, costs)`` with a
    leading sample axis; thresholds are NaN except at MARK roots.
    """
    if not q > 0:
        raise ValueError("rate q must be positive")
    return _kernels.wilson_batch(g.n, float(q), int(count), stream_seed(random_state), *g.sampler.arrays)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Root maps of the coupled process at requested rates.

    ``snapshots[q]`` is the root array of the forest at rate ``q``;
    ``killed[q]`` flags nodes whose root is a KILL root.  ``forest_max`` is
    the full forest at ``q_max``.  ``events`` lists the processed unfreezing
    thresholds when requested.
    """

    snapshots: dict
    killed: dict
    forest_max: Forest
    cost: CostStats
    q_range: tuple
    events: np.ndarray | None = None


def _check_grid(q_min, q_max, grid):
    if not q_min > 0:
        raise ValueError("q_min must be positive")
    if q_max < q_min:
        raise ValueError("q_max must be at least q_min")
    grid = np.unique(np.asarray(grid if grid is not None else [], dtype=float))
    if grid.size and (grid[0] < q_min or grid[-1] > q_max):
        raise ValueError("grid values must lie in [q_min, q_max]")
    return grid[::-1].copy()


def coupled_trajectory(g: WeightedGraph, q_min, q_max, grid=(), random_state=None, record_events=False):
    """Sample one coupled forest trajectory from ``q_max`` down to ``q_min``.

    The forest at ``q_max`` comes from :func:`wilson_sample` with the same
    stream; roots are then unfrozen in decreasing order of their thresholds.
    The snapshot at a grid value ``q`` is the forest after all unfreezing
    events with threshold strictly above ``q``.
    """
    grid_desc = _check_grid(q_min, q_max, grid)
    seed = stream_seed(random_state)
    roots, nexts, costs = _kernels.trajectory_batch(
        g.n, float(q_max), float(q_min), grid_desc, 1, seed, *g.sampler.arrays)
    snaps, killed = {}, {}
    for j, q in enumerate(grid_desc):
        r, k = decode_roots(roots[0, j])
        snaps[float(q)] = r
        killed[float(q)] = k
    nxt = nexts[0]
    # root kinds at q_max are recoverable from the snapshot-free Wilson pass
    _, kinds, _, _ = _kernels.wilson_batch(g.n, float(q_max), 1, seed, *g.sampler.arrays)
    events = None
    if record_events:
        events = _kernels.coupled_events(g.n, float(q_max), float(q_min), *g.sampler.arrays, seed)
    return Trajectory(snaps, killed, Forest(nxt, kinds[0]), CostStats(int(costs[0, 0]), int(costs[0, 1])),
                      (float(q_min), float(q_max)), events)


def coupled_trajectories(g: WeightedGraph, q_min, q_max, grid, count, random_state=None):
    """Batch of independent trajectories from one stream.

    Returns ``(roots, costs)``: signed root arrays of shape
    ``(count, len(grid), n)`` ordered by *ascending* grid value, and the
    ``(S, R)`` counters of each trajectory.
    """
    grid_desc = _check_grid(q_min, q_max, grid)
    roots, _, costs = _kernels.trajectory_batch(
        g.n, float(q_max), float(q_min), grid_desc, int(count), stream_seed(random_state), *g.sampler.arrays)
    return roots[:, ::-1, :], costs


def event_forests(g: WeightedGraph, q_min, q_max, random_state=None):
    """Full event dump: ``[(threshold, root array after the event), ...]``."""
    seed = stream_seed(random_state)
    events = _kernels.coupled_events(g.n, float(q_max), float(q_min), *g.sampler.arrays, seed)
    if events.size == 0:
        return []
    after = np.nextafter(events, 0.0)
    after = np.maximum(after, q_min)
    grid_desc = np.unique(after)[::-1].copy()
    roots, _, _ = _kernels.trajectory_batch(g.n, float(q_max), float(q_min), grid_desc, 1, seed, *g.sampler.arrays)
    lookup = {float(q): decode_roots(roots[0, j])[0] for j, q in enumerate(grid_desc)}
    return [(float(e), lookup[float(a)]) for e, a in zip(events, after)]


@dataclass(frozen=True)
class CostBounds:
    expected_S_exact: float | None
    S_upper: float
    R_upper: float


def cost_bounds(g: WeightedGraph, q0: float, exact=True, dense_cap=2000) -> CostBounds:
    """Expected sampling cost of a trajectory down to ``q0`` and its bounds.

    ``expected_S_exact`` is ``Tr((q0 Id - L)^-1 (q0 Id + W))`` with ``W`` the
    diagonal of total weights, obtained by a dense solve (refused above
    ``dense_cap`` nodes; pass ``exact=False`` to skip it).
    """
    if not q0 > 0:
        raise ValueError("q0 must be positive")
    n = g.n
    wt = g.total_weight
    sc = graph_scalars(g)
    S_upper = n * (1.0 + sc.lambda_bar / q0)
    R_upper = n * np.log1p(float(wt.max(initial=0.0)) / q0)
    exact_S = None
    if exact:
        if n > dense_cap:
            raise OracleSizeError(f"dense trace formula refused for n={n} > {dense_cap}")
        A = q0 * np.eye(n) - g.laplacian(dense=True)
        B = np.diag(q0 + wt)
        exact_S = float(np.trace(np.linalg.solve(A, B)))
    return CostBounds(exact_S, float(S_upper), float(R_upper))
