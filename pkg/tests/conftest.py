"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's own numerics: forest laws
come from brute-force enumeration and spectral quantities from dense
``numpy.linalg`` calls.
"""
import itertools

import numpy as np
import pytest

from forest_spectra import WeightedGraph


def k2():
    return WeightedGraph.from_edges(2, [0], [1])


def triangle():
    return WeightedGraph.from_edges(3, [0, 1, 0], [1, 2, 2])


def path3():
    return WeightedGraph.from_edges(3, [0, 1], [1, 2])


@pytest.fixture
def k2_graph():
    return k2()


@pytest.fixture
def triangle_graph():
    return triangle()


@pytest.fixture
def path3_graph():
    return path3()


def dense_laplacian(g):
    """Generator ``L = A - diag(w + delta)`` rebuilt from the edge list."""
    L = np.zeros((g.n, g.n))
    u, v, w = g.edges()
    for a, b, c in zip(u, v, w):
        L[a, b] += c
        L[b, a] += c
        L[a, a] -= c
        L[b, b] -= c
    L -= np.diag(g.kill_weight)
    return L


def spectrum(g):
    """Eigenvalues of ``-L`` in ascending order."""
    return np.linalg.eigvalsh(-dense_laplacian(g))


def enumerate_forests(g, q):
    """All rooted spanning forests of ``g`` with their Kirchhoff probabilities.

    A forest is a tuple ``next`` with ``-1`` at roots.  Weights are
    ``q**roots * prod(w(x, next[x]))``; killing arrows are not modelled, so
    ``g`` must be a true Laplacian.
    """
    A = dense_laplacian(g)
    np.fill_diagonal(A, 0.0)
    choices = [[-1] + [y for y in range(g.n) if A[x, y] > 0] for x in range(g.n)]
    out = {}
    for nxt in itertools.product(*choices):
        ok = True
        for x in range(g.n):
            seen = set()
            y = x
            while y != -1:
                if y in seen:
                    ok = False
                    break
                seen.add(y)
                y = nxt[y]
            if not ok:
                break
        if not ok:
            continue
        wt = 1.0
        for x, y in enumerate(nxt):
            wt *= q if y == -1 else A[x, y]
        out[nxt] = wt
    Z = sum(out.values())
    return {k: v / Z for k, v in out.items()}


def root_map_of(nxt):
    nxt = list(nxt)
    roots = []
    for x in range(len(nxt)):
        y = x
        while nxt[y] != -1:
            y = nxt[y]
        roots.append(y)
    return tuple(roots)


def root_map_law(g, q):
    law = {}
    for f, p in enumerate_forests(g, q).items():
        r = root_map_of(f)
        law[r] = law.get(r, 0.0) + p
    return law


def chi_square_pvalue(samples, law):
    """Goodness of fit of hashable ``samples`` against a probability dict."""
    from scipy.stats import chisquare

    keys = sorted(law)
    counts = dict.fromkeys(keys, 0)
    extra = 0
    for s in samples:
        if s in counts:
            counts[s] += 1
        else:
            extra += 1
    assert extra == 0, f"{extra} samples outside the support"
    obs = np.array([counts[k] for k in keys], dtype=float)
    exp = np.array([law[k] for k in keys]) * obs.sum()
    return chisquare(obs, exp).pvalue


def random_atomic_measure(rng, max_atoms=6):
    k = int(rng.integers(1, max_atoms + 1))
    x = rng.random(k)
    w = rng.random(k) + 0.05
    return x, w / w.sum()


def power_moments(x, w, l):
    return np.array([np.sum(w * x**j) for j in range(l + 1)])


# acceptance lines collected by tests/test_acceptance.py, echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
