"""Input validation helpers shared by the estimators and the CLI."""
from __future__ import annotations

import numbers

import numpy as np
import scipy.sparse as sp

from .embed import SymmetricMatrix
from .exceptions import GraphError
from .graph import WeightedGraph


def check_positive(value, name, allow_zero=False):
    """Return ``value`` as float after checking it is finite and positive."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    v = float(value)
    if not np.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value}")
    return v


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be at least {minimum}, got {value}")
    return int(value)


def check_fraction(value, name):
    v = check_positive(value, name)
    if v > 1:
        raise ValueError(f"{name} must lie in (0, 1], got {value}")
    return v


def check_grid(values, name="grid"):
    """Sorted unique positive rates as a float array."""
    q = np.unique(np.asarray(values, dtype=float).ravel())
    if q.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(q)) or q[0] <= 0:
        raise ValueError(f"{name} must hold finite positive rates")
    return q


def check_seed(random_state):
    """Integer base seed from ``None``, an int or a numpy generator."""
    if random_state is None:
        return 0
    if isinstance(random_state, numbers.Integral) and not isinstance(random_state, bool):
        if random_state < 0:
            raise ValueError("seed must be non-negative")
        return int(random_state)
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**63))
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(0, 2**31))
    raise TypeError(f"cannot derive a seed from {type(random_state).__name__}")


def check_input(X, matrix_kind="adjacency"):
    """Turn estimator input into a :class:`WeightedGraph` or :class:`SymmetricMatrix`.

    Parameters
    ----------
    X : WeightedGraph, SymmetricMatrix, ndarray or sparse matrix
    matrix_kind : {"adjacency", "generator", "symmetric"}
        How a raw matrix is read: as a weighted adjacency matrix, as a
        (sub-)Laplacian generator ``L`` (off-diagonals >= 0, dominant), or
        as an arbitrary symmetric matrix to be embedded.
    """
    if isinstance(X, (WeightedGraph, SymmetricMatrix)):
        return X
    if not (sp.issparse(X) or isinstance(X, (np.ndarray, list))):
        raise TypeError(f"unsupported input type {type(X).__name__}")
    A = sp.csr_matrix(np.asarray(X, dtype=float)) if not sp.issparse(X) else sp.csr_matrix(X, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise GraphError("expected a square matrix")
    if matrix_kind == "adjacency":
        return WeightedGraph.from_adjacency(A)
    if matrix_kind == "generator":
        from .embed import make_sub_laplacian

        return make_sub_laplacian(A)
    if matrix_kind == "symmetric":
        return SymmetricMatrix(A)
    raise ValueError(f"unknown matrix_kind {matrix_kind!r}")


def check_moments(moments, a=0.0, b=1.0):
    """Validate a raw moment vector ``m_0..m_l`` and its interval."""
    m = np.asarray(moments, dtype=float).ravel()
    if m.size == 0 or not np.all(np.isfinite(m)):
        raise ValueError("moments must be a non-empty finite vector")
    if not m[0] > 0:
        raise ValueError("m_0 must be positive")
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise ValueError("interval must satisfy a < b")
    return m
