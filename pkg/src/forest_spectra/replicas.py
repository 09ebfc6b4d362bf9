"""Replica composition of coupled forests and Monte Carlo rational moments.

For ``l`` independent forests at rate ``q`` the composed root map
``R^k`` has ``E #{x : R^k(x) = x} = sum_j (q / (q + lambda_j))**k``, so the
per-node average estimates the ``k``-th moment of ``Y_q = q / (q + lambda_J)``
with ``J`` uniform over the spectrum of ``-L``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .forest import group_seeds
from .graph import WeightedGraph


@dataclass(frozen=True)
class QGrid:
    """Geometric rate grid ``q_i = q0 * r**i``, ``i = 0..N`` ending at ``2 alpha``."""

    q0: float
    eps0: float
    ratio: float
    q_values: np.ndarray

    def __len__(self):
        return self.q_values.shape[0]


def make_grid(q0: float, alpha: float, eps0: float) -> QGrid:
    """Geometric grid with ``ceil(1/eps0) + 1`` points from ``q0`` to ``2 alpha``.

    The ratio is ``(2 alpha / q0) ** (1 / N)`` which equals
    ``exp(eps0 * ln(2 alpha / q0))`` whenever ``1 / eps0`` is an integer.
    """
    if not 0 < eps0 <= 1:
        raise ValueError("eps0 must lie in (0, 1]")
    if not q0 > 0:
        raise ValueError("q0 must be positive")
    top = 2.0 * alpha
    if not q0 < top:
        raise ValueError(f"q0={q0} must be smaller than 2*alpha={top}")
    steps = math.ceil(1.0 / eps0 - 1e-9)
    ratio = (top / q0) ** (1.0 / steps)
    q = q0 * ratio ** np.arange(steps + 1)
    q[-1] = top
    return QGrid(q0=float(q0), eps0=float(eps0), ratio=float(ratio), q_values=q)


def xi_sizes(root_maps, killed=None) -> np.ndarray:
    """Sizes ``|xi^k|``, ``k = 1..l``, for ``l`` root maps at one rate.

    Parameters
    ----------
    root_maps : (l, n) array of int
        ``root_maps[k][x]`` is the root of ``x`` in the ``k``-th forest.
    killed : (l, n) array of bool, optional
        Flags nodes whose root is a KILL root; such chains are not counted.
    """
    roots = np.asarray(root_maps)
    if roots.ndim != 2:
        raise ValueError("root_maps must have shape (l, n)")
    l, n = roots.shape
    enc = roots.astype(np.int32)
    if killed is not None:
        killed = np.asarray(killed, dtype=bool)
        if killed.shape != roots.shape:
            raise ValueError("killed must match root_maps in shape")
        enc = np.where(killed, -enc - 1, enc).astype(np.int32)
    out = np.zeros(l, dtype=np.int64)
    _kernels.xi_counts(np.ascontiguousarray(enc), out, np.empty(n, dtype=np.int64))
    return out


@dataclass(frozen=True, eq=False)
class MomentEstimates:
    """Monte Carlo moments ``m_k(q)`` on a rate grid.

    Attributes
    ----------
    q : (G,) ascending rates
    mean, stderr : (G, l) arrays, column ``k - 1`` for moment ``k``
    counts : (s, G, l) int array of raw ``|xi|`` sizes per group
    costs : (s, l, 2) int array of (S, R) per trajectory
    """

    q: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    costs: np.ndarray
    n: int
    s: int
    l: int

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q", "k", "mean", "stderr", "s", "l"])
            for i, q in enumerate(self.q):
                for k in range(self.l):
                    w.writerow([repr(float(q)), k + 1, repr(float(self.mean[i, k])),
                                repr(float(self.stderr[i, k])), self.s, self.l])


def estimate_moments(g: WeightedGraph, grid, l=4, s=400, base_seed=0, chunk=256) -> MomentEstimates:
    """Estimate ``m_1..m_l`` at every grid rate from ``s`` groups of ``l`` trajectories.

    Each group draws its ``l`` coupled trajectories (from ``max(grid)`` down
    to ``min(grid)``) from its own stream, see :func:`forest.group_seeds`.
    Standard errors are computed across groups.
    """
    if l < 1:
        raise ValueError("need at least one replica")
    if s < 2:
        raise ValueError("need at least two groups for a standard error")
    q = np.asarray(grid.q_values if isinstance(grid, QGrid) else grid, dtype=float)
    q = np.unique(q)
    if q.size == 0 or q[0] <= 0:
        raise ValueError("grid must hold positive rates")
    grid_desc = q[::-1].copy()
    counts = np.empty((s, q.size, l), dtype=np.int64)
    costs = np.empty((s, l, 2), dtype=np.int64)
    arrays = g.sampler.arrays
    for start in range(0, s, chunk):
        stop = min(s, start + chunk)
        seeds = group_seeds(base_seed, stop - start, start=start)
        xi, cst = _kernels.group_xi(g.n, l, float(q[-1]), float(q[0]), grid_desc, seeds, *arrays)
        counts[start:stop] = xi[:, ::-1, :]
        costs[start:stop] = cst
    mean = counts.mean(axis=0) / g.n
    stderr = counts.std(axis=0, ddof=1) / math.sqrt(s) / g.n
    return MomentEstimates(q=q, mean=mean, stderr=stderr, counts=counts, costs=costs, n=g.n, s=s, l=l)


def exact_moments(eigenvalues, q, l):
    """``(1/n) sum_j (q / (q + lambda_j))**k`` for ``k = 1..l`` (dense oracle)."""
    lam = np.asarray(eigenvalues, dtype=float)
    q = np.atleast_1d(np.asarray(q, dtype=float))
    y = q[:, None] / (q[:, None] + lam[None, :])
    return np.stack([(y ** k).mean(axis=1) for k in range(1, l + 1)], axis=1)


@dataclass(frozen=True)
class VarianceReport:
    ratio: np.ndarray
    violations: list
    slack: float

    @property
    def ok(self):
        return not self.violations


def group_variance_check(estimates: MomentEstimates, slack=1.2) -> VarianceReport:
    """Compare the sample variance of ``|xi_q^k|`` with its sample mean.

    Negative correlations bound the variance by the mean; pairs ``(q, k)``
    whose variance exceeds ``slack`` times the mean are reported.
    """
    c = np.asarray(estimates.counts, dtype=float)
    if c.shape[0] < 30:
        raise ValueError("variance check needs at least 30 groups")
    var = c.var(axis=0, ddof=1)
    mu = c.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mu > 0, var / mu, np.where(var > 0, np.inf, 0.0))
    bad = np.argwhere(var > slack * mu)
    violations = [(float(estimates.q[i]), int(k) + 1, float(ratio[i, k])) for i, k in bad]
    return VarianceReport(ratio=ratio, violations=violations, slack=slack)
