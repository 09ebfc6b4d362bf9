"""Maximum-entropy densities ``exp(-sum_j beta_j y^j)`` matching given moments.

The fit minimises the convex dual objective ``ln Xi_beta + sum_j beta_j m_j``
by safeguarded Newton steps.  Internally everything is expressed in the
rescaled variable ``x = (y - a)/(b - a)`` on ``[0, 1]``; multipliers in that
variable are called ``theta`` and the ones in the original variable ``beta``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as P

from .exceptions import SingularMomentError
from .moments import MomentSequence

PANELS = 8
NODES = 32
GRAD_TOL = 1e-8
MAX_HALVINGS = 30
THETA_GUARD = 1e6


@lru_cache(maxsize=None)
def _unit_rule(panels=PANELS, nodes=NODES):
    g, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    x.setflags(write=False)
    wt.setflags(write=False)
    return x, wt


def _rule(lo=0.0, hi=1.0):
    x, w = _unit_rule()
    return lo + (hi - lo) * x, (hi - lo) * w


def _log_weights(theta, x):
    """``-sum_j theta_j x^j`` at the nodes, shifted so that its maximum is 0."""
    expo = -P.polyval(x, np.concatenate([[0.0], theta]))
    shift = expo.max()
    return expo - shift, shift


def _unit_moments(theta, max_power):
    """``(E[x^j] for j <= max_power, ln Xi)`` under ``exp(-theta . x)`` on ``[0, 1]``."""
    x, w = _rule()
    e, shift = _log_weights(np.asarray(theta, dtype=float), x)
    dens = w * np.exp(e)
    z = dens.sum()
    powers = x[None, :] ** np.arange(max_power + 1)[:, None]
    return powers @ dens / z, np.log(z) + shift


def theta_to_beta(theta, a, b):
    """Convert rescaled multipliers to the original variable.

    Returns ``(beta, c)`` with ``sum_j theta_j x^j = c + sum_j beta_j y^j``.
    """
    h = b - a
    comp = np.concatenate([[0.0], np.asarray(theta, dtype=float)])
    # substitute x = (y - a)/h
    poly = np.zeros(comp.size)
    base = np.array([1.0])
    lin = np.array([-a / h, 1.0 / h])
    for j, cj in enumerate(comp):
        poly[: base.size] += cj * base
        base = P.polymul(base, lin)
    return poly[1:], float(poly[0])


def beta_to_theta(beta, a, b):
    """Inverse of :func:`theta_to_beta` (the constant term is dropped)."""
    h = b - a
    comp = np.concatenate([[0.0], np.asarray(beta, dtype=float)])
    poly = np.zeros(comp.size)
    base = np.array([1.0])
    lin = np.array([a, h])
    for cj in comp:
        poly[: base.size] += cj * base
        base = P.polymul(base, lin)
    return poly[1:]


def moment_integrals(beta, interval=(0.0, 1.0), max_power=None):
    """Moments ``E[y^j]``, ``j = 0..max_power``, of the density ``exp(-sum beta_j y^j)``.

    Parameters
    ----------
    beta : array_like
        ``beta_1..beta_k``.
    interval : (a, b)
    max_power : int, optional
        Defaults to ``2k``.

    Returns
    -------
    moments : ndarray
        Normalised moments (``moments[0] == 1``).
    log_partition : float
        ``ln Xi_beta = ln int_a^b exp(-sum beta_j y^j) dy``.
    """
    a, b = map(float, interval)
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if not np.all(np.isfinite(beta)):
        raise ValueError("multipliers must be finite")
    if max_power is None:
        max_power = 2 * beta.size
    theta = beta_to_theta(beta, a, b)
    _, c = theta_to_beta(theta, a, b)
    unit, log_z = _unit_moments(theta, max_power)
    # y = a + h x, and exp(-sum beta y^j) = exp(c) exp(-sum theta x^j)
    h = b - a
    return _shift_moments(unit, a, h), float(log_z + c + np.log(h))


def _shift_moments(unit, a, h):
    return np.array([
        sum(comb(j, i) * a ** (j - i) * h**i * unit[i] for i in range(j + 1)) for j in range(unit.size)
    ])


def maxent_objective(theta, target):
    """Dual objective on ``[0, 1]`` with its gradient and Hessian.

    ``f = ln Xi_theta + theta . target``; ``grad_j = target_j - E[x^j]``;
    the Hessian is the covariance matrix of ``(x, ..., x^k)``.
    """
    theta = np.asarray(theta, dtype=float)
    target = np.asarray(target, dtype=float)
    k = theta.size
    mom, log_z = _unit_moments(theta, 2 * k)
    f = log_z + float(np.dot(theta, target))
    g = target - mom[1 : k + 1]
    idx = np.arange(1, k + 1)
    H = mom[idx[:, None] + idx[None, :]] - np.outer(mom[1 : k + 1], mom[1 : k + 1])
    return f, g, H


@dataclass(frozen=True, eq=False)
class MaxentModel:
    """Fitted density ``(1/Xi) exp(-sum_j beta_j y^j)`` on ``[a, b]``.

    ``status`` is ``"converged"``, ``"max_iter"`` (iteration cap reached) or
    ``"degenerate"`` (singular Hessian or runaway multipliers).
    """

    a: float
    b: float
    theta: np.ndarray
    converged: bool
    iterations: int
    status: str
    objective: float
    grad_norm: float

    @property
    def k(self):
        return self.theta.size

    @property
    def beta(self):
        return theta_to_beta(self.theta, self.a, self.b)[0]

    @property
    def log_partition(self):
        return moment_integrals(self.beta, (self.a, self.b), 0)[1]

    def moments(self, max_power=None):
        """Normalised moments ``E[y^j]`` of the fitted density."""
        return moment_integrals(self.beta, (self.a, self.b), self.k if max_power is None else max_power)[0]

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        x = (y - self.a) / (self.b - self.a)
        _, log_z = _unit_moments(self.theta, 0)
        dens = np.exp(-P.polyval(x, np.concatenate([[0.0], self.theta])) - log_z) / (self.b - self.a)
        return np.where((y >= self.a) & (y <= self.b), dens, 0.0)


def _target(ms: MomentSequence):
    tau = ms.rescaled
    return tau[1:] / tau[0]


def maxent_fit(ms: MomentSequence, init=None, max_iter=50) -> MaxentModel:
    """Fit the maximum-entropy density matching ``m_1..m_k`` (normalised by ``m_0``).

    Parameters
    ----------
    ms : MomentSequence
        Regular sequence ``m_0..m_k`` on ``[a, b]``.
    init : array_like, optional
        Starting multipliers in the rescaled variable (``theta``); shorter
        vectors are padded with zeros.  Defaults to zeros.
    max_iter : int
        Newton iteration cap.

    Returns
    -------
    MaxentModel
        ``converged`` is false when the cap was hit or the problem
        degenerated; no exception is raised in those cases.

    Raises
    ------
    SingularMomentError
        If the sequence is not interior to the moment space.
    """
    if ms.l < 1:
        raise ValueError("need at least one moment beyond m_0")
    if not ms.is_regular:
        raise SingularMomentError(f"maxent needs a regular sequence, got a {ms.status} one")
    target = _target(ms)
    k = target.size
    theta = np.zeros(k)
    if init is not None:
        init = np.asarray(init, dtype=float).ravel()[:k]
        theta[: init.size] = init
    scale = np.maximum(target, 1e-3)
    f, g, H = maxent_objective(theta, target)
    status = "max_iter"
    it = 0
    for it in range(max_iter + 1):
        if np.max(np.abs(g) / scale) <= GRAD_TOL:
            status = "converged"
            break
        if it == max_iter:
            break
        try:
            step = scipy.linalg.solve(H, g, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            status = "degenerate"
            break
        if not np.all(np.isfinite(step)):
            status = "degenerate"
            break
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = theta - lam * step
            fc, gc, Hc = maxent_objective(cand, target)
            if np.isfinite(fc) and fc <= f:
                break
            lam *= 0.5
        else:
            status = "degenerate"
            break
        theta, f, g, H = cand, fc, gc, Hc
        if np.max(np.abs(theta)) > THETA_GUARD:
            status = "degenerate"
            break
    return MaxentModel(
        a=float(ms.a), b=float(ms.b), theta=theta, converged=status == "converged", iterations=it,
        status=status, objective=float(f), grad_norm=float(np.max(np.abs(g))),
    )


def tail_probability(model: MaxentModel, xi) -> float:
    """``nu([xi, b])`` under the fitted density."""
    if xi <= model.a:
        return 1.0
    if xi >= model.b:
        return 0.0
    x0 = (xi - model.a) / (model.b - model.a)
    xs, ws = _rule()
    e, shift = _log_weights(model.theta, xs)
    z = np.dot(ws, np.exp(e))
    xt, wt = _rule(x0, 1.0)
    et = -P.polyval(xt, np.concatenate([[0.0], model.theta])) - shift
    p = float(np.dot(wt, np.exp(et)) / z)
    return min(max(p, 0.0), 1.0)
