"""Truncated Hausdorff moment problem on an interval ``[a, b]``.

Given ``m_0..m_l`` this module decides whether the sequence is realisable
by a non-negative measure on ``[a, b]`` (and whether it is *regular*, i.e.
interior to the moment space), builds the two principal representations
and the canonical representation through a point, and reads off the
Markov bounds on the tail mass ``mu([xi, b])``.

All constructions work on the affinely rescaled interval ``[0, 1]``;
atoms are mapped back before being returned.  Polynomials are
coefficient arrays in ascending order (``numpy.polynomial`` convention)
in the rescaled variable.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq

from .exceptions import NumericalDegeneracyError, SingularMomentError

#: relative tolerance on recursion denominators (rescaled interval)
REGULARITY_TOL = 1e-12
#: roundoff allowance for weights and atoms
WEIGHT_TOL = 1e-12
RESIDUAL_TOL = 1e-9


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True, eq=False)
class MomentSequence:
    """Moments ``m_0..m_l`` of a measure on ``[a, b]``.

    Parameters
    ----------
    moments : array_like
        ``m_0, m_1, ..., m_l`` with ``m_0 > 0``.
    a, b : float
        Support interval, ``a < b``.
    """

    moments: np.ndarray
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        m = np.array(self.moments, dtype=float).ravel()
        if m.size == 0:
            raise ValueError("need at least m_0")
        if not np.all(np.isfinite(m)):
            raise ValueError("moments must be finite")
        if not m[0] > 0:
            raise ValueError("m_0 must be positive")
        if not self.a < self.b:
            raise ValueError("interval must satisfy a < b")
        m.setflags(write=False)
        object.__setattr__(self, "moments", m)

    @property
    def l(self):
        return self.moments.size - 1

    @property
    def m0(self):
        return float(self.moments[0])

    def prefix(self, k):
        """The sequence ``m_0..m_k``."""
        return MomentSequence(self.moments[: k + 1], self.a, self.b)

    def to_unit(self, y):
        return (np.asarray(y, dtype=float) - self.a) / (self.b - self.a)

    def from_unit(self, x):
        return self.a + (self.b - self.a) * np.asarray(x, dtype=float)

    @cached_property
    def rescaled(self):
        """Moments of the pushforward on ``[0, 1]`` under ``y -> (y - a)/(b - a)``."""
        m, a, h = self.moments, self.a, self.b - self.a
        out = np.empty_like(m)
        for k in range(m.size):
            out[k] = sum(comb(k, i) * m[i] * (-a) ** (k - i) for i in range(k + 1)) / h**k
        return out

    @cached_property
    def _cache(self):
        return {}

    @cached_property
    def _classification(self):
        return _classify(self.rescaled)

    @property
    def regular_length(self):
        """Largest ``j`` such that ``m_0..m_j`` is regular."""
        return self._classification[0]

    @property
    def status(self):
        """``"regular"``, ``"singular"`` (on the boundary) or ``"inadmissible"``."""
        return self._classification[1]

    @property
    def is_regular(self):
        return self.status == "regular"


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite measure ``sum_i w_i delta_{x_i}``; atoms sorted increasingly."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.atoms, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if x.shape != w.shape:
            raise ValueError("atoms and weights differ in length")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "atoms", x[order])
        object.__setattr__(self, "weights", w[order])

    @property
    def mass(self):
        return float(self.weights.sum())

    def moments(self, l):
        return np.array([np.dot(self.weights, self.atoms**k) for k in range(l + 1)])

    def tail(self, xi, closed=True):
        """``nu([xi, inf))`` or, with ``closed=False``, ``nu((xi, inf))``."""
        sel = self.atoms >= xi if closed else self.atoms > xi
        return float(self.weights[sel].sum())

    def index(self, a, b, tol=1e-12):
        """Endpoint atoms count once, interior atoms twice."""
        span = tol * (b - a)
        ends = np.sum((np.abs(self.atoms - a) <= span) | (np.abs(self.atoms - b) <= span))
        return int(ends + 2 * (self.atoms.size - ends))


@dataclass(frozen=True)
class MarkovBounds:
    """Bounds ``lower <= mu((xi, b]) <= mu([xi, b]) <= upper`` (divided by ``m_0``).

    ``t`` is the (normalised) mass the canonical representation puts on
    ``xi``; ``method`` is ``"canonical"``, ``"unique"`` (singular sequence)
    or ``"trivial"`` (``xi`` outside ``(a, b)``).
    """

    lower: float
    upper: float
    t: float
    method: str
    representation: AtomicMeasure | None = None

    @property
    def width(self):
        return self.upper - self.lower


# ---------------------------------------------------------------------------
# orthogonal polynomials


def _inner(p, q, mom):
    c = np.convolve(p, q)
    return float(np.dot(c, mom[: c.size]))


@dataclass(frozen=True)
class OrthogonalSystem:
    """Monic orthogonal polynomials ``U_k`` and orthonormal ``V_k`` of a moment functional.

    ``U`` holds every ``U_k`` the available moments determine, ``norms[k]``
    is ``<U_k, U_k>`` where computable and ``V`` the matching orthonormal
    polynomials.  ``singular_at`` is the first ``k`` whose norm fell below
    the tolerance (``None`` when all are positive); ``negative`` tells a
    strictly negative norm (inadmissible functional) from a vanishing one.
    """

    U: list
    V: list
    norms: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    singular_at: int | None
    negative: bool

    @property
    def regular(self):
        return self.singular_at is None


def _recurrence(mom, tol):
    mom = np.asarray(mom, dtype=float)
    L = mom.size - 1
    U = [np.array([1.0])]
    h = [float(mom[0])] if L >= 0 else []
    beta, gamma = [], []
    singular_at, negative = None, False
    if L < 0:
        return OrthogonalSystem(U, [], np.array([]), np.array([]), np.array([]), None, False)
    if h[0] <= tol:
        singular_at, negative = 0, h[0] < -tol
    k = 0
    while singular_at is None and 2 * k + 1 <= L:
        bk = _inner(P.polymulx(U[k]), U[k], mom) / h[k]
        nxt = P.polysub(P.polymulx(U[k]), bk * U[k])
        if k > 0:
            gk = h[k] / h[k - 1]
            nxt = P.polysub(nxt, gk * U[k - 1])
            gamma.append(gk)
        beta.append(bk)
        U.append(nxt)
        if 2 * (k + 1) > L:
            break
        hk = _inner(nxt, nxt, mom)
        h.append(hk)
        if hk <= tol:
            singular_at, negative = k + 1, hk < -tol
        k += 1
    norms = np.array(h)
    V = [U[j] / np.sqrt(norms[j]) for j in range(norms.size) if norms[j] > 0]
    return OrthogonalSystem(U, V, norms, np.array(beta), np.array(gamma), singular_at, negative)


def _modified_moments(tau, kind):
    """Moments of ``x mu``, ``(1 - x) mu`` or ``x (1 - x) mu`` on ``[0, 1]``."""
    if kind == "mu":
        return tau
    if kind == "a":
        return tau[1:]
    if kind == "b":
        return tau[:-1] - tau[1:]
    if kind == "ab":
        return tau[1:-1] - tau[2:]
    raise ValueError(kind)


def orthogonal_polynomials(ms: MomentSequence, kind="mu") -> OrthogonalSystem:
    """Orthogonal polynomials of ``mu`` (or a modified measure) on the rescaled interval.

    Parameters
    ----------
    ms : MomentSequence
    kind : {"mu", "a", "b", "ab"}
        Measure whose moments drive the recurrence: ``mu`` itself,
        ``(y - a) mu``, ``(b - y) mu`` or ``(y - a)(b - y) mu``.

    Returns
    -------
    OrthogonalSystem
        For ``l = 2r`` the ``U_k`` and ``V_k`` up to degree ``r``; for
        ``l = 2r + 1`` the ``U_k`` up to ``r + 1`` and ``V_k`` up to ``r``.
        A singular prefix is reported through ``singular_at``.
    """
    key = ("system", kind)
    if key not in ms._cache:
        tau = _modified_moments(ms.rescaled, kind)
        ms._cache[key] = _recurrence(tau, REGULARITY_TOL * ms.rescaled[0])
    return ms._cache[key]


def _conditions(tau, j):
    """Recursion denominators whose positivity makes ``tau[:j+1]`` regular."""
    m = tau[: j + 1]
    tol = REGULARITY_TOL * tau[0]
    kinds = ("mu", "ab") if j % 2 == 0 else ("a", "b")
    systems = []
    for kind in kinds:
        mom = _modified_moments(m, kind)
        if mom.size == 0:
            continue
        systems.append(_recurrence(mom, tol))
    return systems


def _classify(tau):
    """``(longest regular prefix length, status of the full sequence)``."""
    last = -1
    for j in range(tau.size):
        systems = _conditions(tau, j)
        if all(s.regular for s in systems):
            last = j
            continue
        status = "inadmissible" if any(s.negative for s in systems) else "singular"
        return last, status
    return last, "regular"


# ---------------------------------------------------------------------------
# roots


def _newton_polish(c, x, lo, hi, steps=3):
    d = P.polyder(c)
    for _ in range(steps):
        fx, dx = P.polyval(x, c), P.polyval(x, d)
        if dx == 0:
            break
        y = x - fx / dx
        if not lo <= y <= hi:
            break
        x = y
    return x


def _real_roots_low(c):
    """Real roots of a polynomial of degree <= 2 (``None`` if complex)."""
    c = np.trim_zeros(np.asarray(c, dtype=float), "b")
    deg = c.size - 1
    if deg <= 0:
        return np.array([])
    if deg == 1:
        return np.array([-c[0] / c[1]])
    c0, c1, c2 = c
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        if disc > -1e-14 * max(c1 * c1, abs(4 * c2 * c0)):
            disc = 0.0
        else:
            return None
    s = np.sqrt(disc)
    qq = -0.5 * (c1 + np.copysign(s, c1))
    if qq == 0:
        return np.array([0.0, 0.0])
    return np.sort(np.array([qq / c2, c0 / qq]))


def _bracketed_roots(c, brackets):
    """One root of ``c`` per bracket; ``None`` entries mark brackets without a sign change."""
    out = []
    for lo, hi in brackets:
        flo, fhi = P.polyval(lo, c), P.polyval(hi, c)
        if flo == 0:
            out.append(lo)
            continue
        if fhi == 0:
            out.append(hi)
            continue
        if np.sign(flo) == np.sign(fhi):
            out.append(None)
            continue
        x = brentq(lambda t: P.polyval(t, c), lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        out.append(_newton_polish(c, x, lo, hi))
    return out


def _orthogonal_roots(system: OrthogonalSystem, k):
    """Zeros of ``U_k`` in ``(0, 1)`` by interlacing with the zeros of ``U_{k-1}``."""
    if k <= 2:
        r = _real_roots_low(system.U[k])
        if r is None:
            raise NumericalDegeneracyError(f"complex zeros for U_{k}")
        return r
    prev = _orthogonal_roots(system, k - 1)
    pts = np.concatenate([[0.0], prev, [1.0]])
    roots = _bracketed_roots(system.U[k], zip(pts[:-1], pts[1:]))
    if any(r is None for r in roots):
        raise NumericalDegeneracyError(f"zeros of U_{k} do not interlace")
    return np.array(roots)


def _kernel(system: OrthogonalSystem, n, x):
    """``K_n(x, .) = sum_{k <= n} V_k(x) V_k`` as a coefficient array, and ``K_n(x, x)``."""
    c = np.zeros(n + 1)
    diag = 0.0
    for k in range(n + 1):
        vx = P.polyval(x, system.V[k])
        c[: system.V[k].size] += vx * system.V[k]
        diag += vx * vx
    return c, diag


def _kernel_roots(system: OrthogonalSystem, n, x):
    """Zeros of ``K_n(x, .)``; ``None`` when one falls far outside ``[0, 1]``."""
    c, _ = _kernel(system, n, x)
    if n <= 2:
        return _real_roots_low(c)
    z = _orthogonal_roots(system, n)
    hit = np.abs(z - x) <= 1e-12
    if hit.any():
        return z[~hit]
    pts = np.concatenate([[-1.0], z, [2.0]])
    brackets = [(lo, hi) for lo, hi in zip(pts[:-1], pts[1:]) if not lo < x < hi]
    roots = _bracketed_roots(c, brackets)
    if any(r is None for r in roots):
        return None
    return np.array(roots)


# ---------------------------------------------------------------------------
# representations


def _solve_weights(atoms, tau):
    k = atoms.size
    V = np.vander(atoms, k, increasing=True).T
    try:
        w = np.linalg.solve(V, tau[:k])
    except np.linalg.LinAlgError:
        return None
    return w


def _check_residual(atoms, w, tau):
    got = np.array([np.dot(w, atoms**k) for k in range(tau.size)])
    return np.max(np.abs(got - tau)) <= RESIDUAL_TOL * tau[0]


def _finish(ms, atoms, w):
    """Clamp roundoff, map to ``[a, b]`` and drop empty atoms."""
    tol = WEIGHT_TOL * ms.rescaled[0]
    if np.any(w < -tol):
        raise NumericalDegeneracyError("negative weight in representation")
    w = np.where(w < 0, 0.0, w)
    atoms = np.clip(atoms, 0.0, 1.0)
    keep = w > 0
    return AtomicMeasure(ms.from_unit(atoms[keep]), w[keep])


def _principal_unit(ms: MomentSequence):
    tau = ms.rescaled
    l = ms.l
    if l == 0:
        return (np.array([0.0]), np.array([tau[0]])), (np.array([1.0]), np.array([tau[0]]))
    r = l // 2
    if l % 2:
        lo_atoms = _orthogonal_roots(orthogonal_polynomials(ms, "mu"), r + 1)
        up_inner = _orthogonal_roots(orthogonal_polynomials(ms, "ab"), r) if r else np.array([])
        up_atoms = np.concatenate([[0.0], up_inner, [1.0]])
    else:
        lo_atoms = np.concatenate([[0.0], _orthogonal_roots(orthogonal_polynomials(ms, "a"), r)])
        up_atoms = np.concatenate([_orthogonal_roots(orthogonal_polynomials(ms, "b"), r), [1.0]])
    out = []
    for atoms in (lo_atoms, up_atoms):
        w = _solve_weights(atoms, tau)
        if w is None or not _check_residual(atoms, w, tau):
            raise NumericalDegeneracyError("principal representation does not reproduce the moments")
        out.append((atoms, w))
    return tuple(out)


def principal_representations(ms: MomentSequence):
    """Lower and upper principal representations of a regular sequence.

    The lower one minimises and the upper one maximises the next moment
    ``m_{l+1}`` among all representing measures.  For ``l = 2r + 1`` the
    lower one is the Gauss rule (zeros of ``U_{r+1}``) and the upper one
    the Gauss-Lobatto rule with nodes ``a, b``; for ``l = 2r`` they are the
    Gauss-Radau rules anchored at ``a`` and at ``b``.

    Returns
    -------
    lower, upper : AtomicMeasure

    Raises
    ------
    SingularMomentError
        If the sequence is not regular.
    """
    if not ms.is_regular:
        raise SingularMomentError(f"moment sequence is {ms.status} (regular up to index {ms.regular_length})")
    (xl, wl), (xu, wu) = _principal_unit(ms)
    return _finish(ms, xl, wl), _finish(ms, xu, wu)


def admissible_interval(ms: MomentSequence):
    """Range ``[m^-_{l+1}, m^+_{l+1}]`` of the next moment over all representing measures."""
    lower, upper = principal_representations(ms)
    k = ms.l + 1
    return float(lower.moments(k)[k]), float(upper.moments(k)[k])


def unique_representation(ms: MomentSequence) -> AtomicMeasure:
    """The only representing measure of a singular sequence.

    With ``m_0..m_j`` regular and ``m_{j+1}`` on the boundary, the measure
    is the principal representation of ``m_0..m_j`` whose next moment is
    nearer to ``m_{j+1}``.
    """
    if ms.status != "singular":
        raise SingularMomentError(f"sequence is {ms.status}; a unique representation needs a singular one")
    if "unique" not in ms._cache:
        j = ms.regular_length
        lower, upper = principal_representations(ms.prefix(j))
        target = ms.moments[j + 1]
        lo = lower.moments(j + 1)[j + 1]
        hi = upper.moments(j + 1)[j + 1]
        ms._cache["unique"] = lower if abs(target - lo) <= abs(target - hi) else upper
    return ms._cache["unique"]


def _branches(ms: MomentSequence, x):
    """The two candidate canonical constructions at rescaled point ``x``.

    Each item is ``(name, Q, endpoint atoms, system, kernel degree)``; the
    weight at ``x`` is ``1 / Q``.
    """
    l = ms.l
    r = l // 2
    out = []
    if l % 2 == 0:
        mu = orthogonal_polynomials(ms, "mu")
        out.append(("none", _kernel(mu, r, x)[1], [], mu, r))
        if r >= 1:
            ab = orthogonal_polynomials(ms, "ab")
            out.append(("ab", x * (1 - x) * _kernel(ab, r - 1, x)[1], [0.0, 1.0], ab, r - 1))
        else:
            out.append(("ab", 0.0, [0.0, 1.0], None, -1))
    else:
        sa = orthogonal_polynomials(ms, "a")
        sb = orthogonal_polynomials(ms, "b")
        out.append(("a", x * _kernel(sa, r, x)[1], [0.0], sa, r))
        out.append(("b", (1 - x) * _kernel(sb, r, x)[1], [1.0], sb, r))
    return out


def christoffel_masses(ms: MomentSequence, xi):
    """Candidate atom masses ``1/Q`` at ``xi`` for both canonical branches.

    Returns a dict ``{branch name: mass}``; the canonical mass is the
    smaller of the two.
    """
    x = float(ms.to_unit(xi))
    return {name: (np.inf if Q <= 0 else 1.0 / Q) for name, Q, *_ in _branches(ms, x)}


def _try_branch(ms, x, branch):
    name, Q, ends, system, deg = branch
    if not Q > 0:
        return None
    tau = ms.rescaled
    inner = _kernel_roots(system, deg, x) if deg >= 1 else np.array([])
    if inner is None:
        return None
    span = 1e-10
    if inner.size and (inner.min() < -span or inner.max() > 1 + span):
        return None
    atoms = np.concatenate([ends, [x], np.clip(inner, 0.0, 1.0)])
    w = _solve_weights(atoms, tau)
    if w is None or np.any(w < -WEIGHT_TOL * tau[0]) or not _check_residual(atoms, w, tau):
        return None
    return atoms, w, len(ends)


def canonical_representation(ms: MomentSequence, xi, branch=None):
    """Representation of a regular sequence with maximal mass at ``xi``.

    Parameters
    ----------
    ms : MomentSequence
        Regular sequence.
    xi : float
        Point strictly inside ``(a, b)``.
    branch : str, optional
        Force one construction (``"none"``/``"ab"`` for even ``l``,
        ``"a"``/``"b"`` for odd ``l``); by default the one with the larger
        kernel value is used, falling back on the other.

    Returns
    -------
    measure : AtomicMeasure
    t : float
        Mass at ``xi``.
    """
    if not ms.is_regular:
        raise SingularMomentError(f"moment sequence is {ms.status} (regular up to index {ms.regular_length})")
    if not ms.a < xi < ms.b:
        raise ValueError("xi must lie strictly inside (a, b)")
    x = float(ms.to_unit(xi))
    cands = _branches(ms, x)
    if branch is not None:
        cands = [c for c in cands if c[0] == branch]
        if not cands:
            raise ValueError(f"unknown branch {branch!r}")
    else:
        cands.sort(key=lambda c: -c[1])
    for cand in cands:
        got = _try_branch(ms, x, cand)
        if got is None:
            continue
        atoms, w, pos = got
        t = max(float(w[pos]), 0.0)
        return _finish(ms, atoms, w), t
    raise NumericalDegeneracyError(f"no canonical representation through xi={xi}")


def markov_bounds(ms: MomentSequence, xi) -> MarkovBounds:
    """Tight bounds on the tail mass at ``xi`` over all representing measures.

    ``lower`` is the mass the canonical representation puts strictly above
    ``xi`` and ``upper`` adds the atom at ``xi``; both are divided by
    ``m_0``.  Outside ``(a, b)`` the bounds are forced: ``[1, 1]`` for
    ``xi <= a`` (the closed tail holds everything) and ``[0, 0]`` for
    ``xi > b``.  Singular sequences have a single representation, whose
    tails are returned.
    """
    m0 = ms.m0
    if xi <= ms.a:
        return MarkovBounds(1.0, 1.0, 0.0, "trivial")
    if xi > ms.b:
        return MarkovBounds(0.0, 0.0, 0.0, "trivial")
    if ms.status == "inadmissible":
        raise SingularMomentError(f"moment sequence is not realisable (regular up to index {ms.regular_length})")
    if ms.status == "singular":
        rep = unique_representation(ms)
        tol = 1e-12 * (ms.b - ms.a)
        lo = float(rep.weights[rep.atoms > xi + tol].sum())
        hi = float(rep.weights[rep.atoms >= xi - tol].sum())
        return MarkovBounds(lo / m0, hi / m0, (hi - lo) / m0, "unique", rep)
    if xi == ms.b:
        t = min(christoffel_masses(ms, xi).values())
        return MarkovBounds(0.0, min(t / m0, 1.0), t / m0, "canonical")
    rep, t = canonical_representation(ms, xi)
    lo = float(rep.weights[rep.atoms > xi].sum())
    lower = min(max(lo / m0, 0.0), 1.0)
    upper = min(max((lo + t) / m0, lower), 1.0)
    return MarkovBounds(lower, upper, t / m0, "canonical", rep)


# ---------------------------------------------------------------------------
# validation of estimated sequences


def next_moment_range(ms: MomentSequence):
    """Admissible range of ``m_{l+1}``; a single point for singular sequences."""
    if ms.status == "regular":
        return admissible_interval(ms)
    if ms.status == "singular":
        rep = unique_representation(ms)
        v = float(rep.moments(ms.l + 1)[ms.l + 1])
        return v, v
    raise SingularMomentError("sequence is not realisable")


def validate_sequence(ms: MomentSequence, radii) -> int:
    """Number of leading moments that stay admissible under their confidence radii.

    Returns the largest ``k`` such that for every ``j <= k`` the interval
    ``[m_j - r_j, m_j + r_j]`` lies inside the admissible range of ``m_j``
    given the point estimates ``m_0..m_{j-1}``.

    Parameters
    ----------
    ms : MomentSequence
    radii : array_like
        ``r_1..r_l`` (length ``l``) or ``r_0..r_l`` (length ``l + 1``, the
        first entry is ignored).
    """
    r = np.asarray(radii, dtype=float).ravel()
    if r.size == ms.l + 1:
        r = r[1:]
    if r.size != ms.l:
        raise ValueError("need one radius per moment m_1..m_l")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("radii must be finite and non-negative")
    m = ms.moments
    scale = m[0] * max(abs(ms.a), abs(ms.b), 1.0) ** np.arange(m.size)
    k_valid = 0
    for j in range(1, ms.l + 1):
        try:
            lo, hi = next_moment_range(ms.prefix(j - 1))
        except (SingularMomentError, NumericalDegeneracyError):
            break
        tol = 1e-12 * scale[j]
        if m[j] - r[j - 1] >= lo - tol and m[j] + r[j - 1] <= hi + tol:
            k_valid = j
        else:
            break
    return k_valid
