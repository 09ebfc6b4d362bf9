"""Edge-list and Matrix Market readers/writers.

The accepted formats are described byte-for-byte in ``docs/formats.md``.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

from .exceptions import GraphError, GraphFormatError, NegativeWeight
from .graph import WeightedGraph

FORMATS = ("edgelist", "mtx")


def _guess_format(path):
    return "mtx" if str(path).endswith((".mtx", ".mm")) else "edgelist"


def load_graph(path, format=None, n=None) -> WeightedGraph:
    """Read a graph file into a :class:`WeightedGraph`.

    Parameters
    ----------
    path : str or path-like
    format : {"edgelist", "mtx"}, optional
        Guessed from the extension when omitted.
    n : int, optional
        Minimal node count (isolated trailing nodes); overrides nothing if
        the file declares more.
    """
    format = format or _guess_format(path)
    if format in ("edgelist", "edge-list"):
        return _read_edgelist(path, n)
    if format in ("mtx", "matrix-market"):
        nn, rows, cols, vals, symmetric, lines = _read_mm(path)
        for r, c, v, ln in zip(rows, cols, vals, lines):
            if r == c:
                raise GraphFormatError("diagonal entry (self-loop) in adjacency matrix", ln)
            if v < 0:
                raise NegativeWeight(f"negative weight {v}", ln)
        if not symmetric:
            _check_symmetric(nn, rows, cols, vals)
            keep = rows < cols
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        return WeightedGraph.from_edges(max(nn, n or 0), rows, cols, vals)
    raise GraphError(f"unknown graph format {format!r}")


def _read_edgelist(path, n_declared=None):
    us, vs, ws, lines = [], [], [], []
    kills = []
    header_n = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] == "n":
                if len(tok) != 2:
                    raise GraphFormatError("header must read 'n <count>'", lineno)
                header_n = _parse_int(tok[1], lineno)
                continue
            if tok[0] == "delta":
                if len(tok) != 3:
                    raise GraphFormatError("killing line must read 'delta <node> <value>'", lineno)
                d = _parse_float(tok[2], lineno)
                if d < 0:
                    raise NegativeWeight(f"negative killing weight {d}", lineno)
                kills.append((tok[1], d, lineno))
                continue
            if len(tok) not in (2, 3):
                raise GraphFormatError(f"expected 'u v [w]', got {len(tok)} fields", lineno)
            w = _parse_float(tok[2], lineno) if len(tok) == 3 else 1.0
            if w < 0:
                raise NegativeWeight(f"negative weight {w}", lineno)
            if tok[0] == tok[1]:
                raise GraphFormatError("self-loop", lineno)
            us.append(tok[0])
            vs.append(tok[1])
            ws.append(w)
            lines.append(lineno)

    names = us + vs + [k[0] for k in kills]
    labels = None
    if all(_is_index(s) for s in names):
        ids = {s: int(s) for s in names}
        size = max((int(s) + 1 for s in names), default=0)
    else:
        ids = {}
        for s in names:
            ids.setdefault(s, len(ids))
        size = len(ids)
        labels = list(ids)
    size = max(size, header_n or 0, n_declared or 0)
    if labels is not None:
        labels += [str(i) for i in range(len(labels), size)]
    kill = np.zeros(size)
    for name, d, _ in kills:
        kill[ids[name]] += d
    u = np.array([ids[s] for s in us], dtype=np.int64)
    v = np.array([ids[s] for s in vs], dtype=np.int64)
    return WeightedGraph.from_edges(size, u, v, np.array(ws, dtype=float), kill_weight=kill, labels=labels)


def _is_index(s):
    return s.isdigit()


def _parse_int(s, lineno):
    try:
        return int(s)
    except ValueError:
        raise GraphFormatError(f"not an integer: {s!r}", lineno) from None


def _parse_float(s, lineno):
    try:
        x = float(s)
    except ValueError:
        raise GraphFormatError(f"not a number: {s!r}", lineno) from None
    if not np.isfinite(x):
        raise GraphFormatError(f"non-finite value {s!r}", lineno)
    return x


def _read_mm(path):
    """Coordinate Matrix Market reader keeping line numbers for diagnostics.

    Returns zero-based ``rows, cols`` and the symmetry flag of the header.
    """
    with open(path) as fh:
        text = fh.readlines()
    if not text or not text[0].lower().startswith("%%matrixmarket"):
        raise GraphFormatError("missing %%MatrixMarket banner", 1)
    banner = text[0].split()
    if len(banner) != 5:
        raise GraphFormatError("malformed banner", 1)
    _, obj, fmt, field, symmetry = (t.lower() for t in banner)
    if obj != "matrix" or fmt != "coordinate":
        raise GraphFormatError("only 'matrix coordinate' files are supported", 1)
    if field not in ("real", "integer", "pattern"):
        raise GraphFormatError(f"unsupported field {field!r}", 1)
    if symmetry not in ("symmetric", "general"):
        raise GraphFormatError(f"unsupported symmetry {symmetry!r}", 1)
    i = 1
    while i < len(text) and (text[i].startswith("%") or not text[i].strip()):
        i += 1
    if i == len(text):
        raise GraphFormatError("missing size line", i)
    size = text[i].split()
    if len(size) != 3:
        raise GraphFormatError("size line must read 'rows cols entries'", i + 1)
    nr, nc, nnz = (_parse_int(t, i + 1) for t in size)
    if nr != nc:
        raise GraphFormatError("matrix must be square", i + 1)
    rows, cols, vals, lines = [], [], [], []
    for lineno in range(i + 2, len(text) + 1):
        line = text[lineno - 1].strip()
        if not line or line.startswith("%"):
            continue
        tok = line.split()
        want = 2 if field == "pattern" else 3
        if len(tok) != want:
            raise GraphFormatError(f"expected {want} fields", lineno)
        r, c = _parse_int(tok[0], lineno), _parse_int(tok[1], lineno)
        if not (1 <= r <= nr and 1 <= c <= nc):
            raise GraphFormatError("index out of range", lineno)
        rows.append(r - 1)
        cols.append(c - 1)
        vals.append(1.0 if field == "pattern" else _parse_float(tok[2], lineno))
        lines.append(lineno)
    if len(rows) != nnz:
        raise GraphFormatError(f"declared {nnz} entries, found {len(rows)}", len(text))
    return (nr, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
            np.array(vals, dtype=float), symmetry == "symmetric", lines)


def _check_symmetric(n, rows, cols, vals):
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    diff = abs(A - A.T)
    if diff.nnz and diff.max() > 1e-12 * max(1.0, abs(A).max()):
        raise GraphFormatError("matrix is not symmetric")


def load_matrix(path):
    """Read a square symmetric Matrix Market file as a sparse CSR matrix."""
    n, rows, cols, vals, symmetric, _ = _read_mm(path)
    if symmetric:
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    else:
        _check_symmetric(n, rows, cols, vals)
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return A


def write_edgelist(g: WeightedGraph, path, comment=None):
    """Write ``g`` in the edge-list format (header, edges, killing lines)."""
    u, v, w = g.edges()
    with open(path, "w") as fh:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"n {g.n}\n")
        for a, b, c in zip(u, v, w):
            fh.write(f"{a} {b} {float(c)!r}\n")
        for x in np.flatnonzero(g.kill_weight > 0):
            fh.write(f"delta {x} {float(g.kill_weight[x])!r}\n")


def write_matrix(A, path):
    """Symmetric coordinate Matrix Market output (lower triangle)."""
    A = sp.tril(sp.csr_matrix(A)).tocoo()
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for r, c, x in zip(A.row, A.col, A.data):
            fh.write(f"{r + 1} {c + 1} {float(x)!r}\n")


def ensure_parent(path):
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
