"""End-to-end spectral CDF estimation, dense oracle and cost benchmarks.

For each rate ``q`` on the geometric grid the moments of
``Y_q = q / (q + lambda_J)`` are estimated from coupled forests, the number
of trustworthy moments ``k_valid`` is determined from their 95% confidence
radii, and ``F(q) = P(lambda_J <= q) = P(Y_q >= 1/2)`` is bracketed by
Markov bounds and predicted by a maximum-entropy fit.
"""
from __future__ import annotations

import csv
import io as _io
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .embed import CoverPair, SymmetricMatrix, embed, monotone_fit
from .exceptions import (
    GraphError,
    NumericalDegeneracyError,
    OracleSizeError,
    SingularMomentError,
)
from .forest import coupled_trajectories, cost_bounds
from .graph import WeightedGraph, graph_scalars
from .maxent import maxent_fit, tail_probability
from .moments import MomentSequence, markov_bounds, validate_sequence
from .replicas import MomentEstimates, estimate_moments, make_grid

XI = 0.5
Z95 = 1.96
TIGHT_WINDOW = 0.01
METHODS = ("markov-exact", "maxent", "trivial")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Parameters of one estimation run.

    Exactly one input source is used, in this order: ``graph`` (in-memory
    :class:`WeightedGraph`), ``matrix`` (in-memory :class:`SymmetricMatrix`),
    ``input_path`` (edge-list or Matrix Market file), ``generator``
    (``{"family": ..., "seed": ..., **params}``).
    """

    input_path: str | None = None
    format: str | None = None
    generator: dict | None = None
    mode: str = "laplacian"
    eps0: float = 0.01
    l: int = 4
    s: int = 400
    base_seed: int = 0
    exact: bool = False
    exact_cap: int = 4000
    isotonic: bool = False
    extra_shift: float = 0.0
    max_iter: int = 50
    output: str | None = None
    graph: WeightedGraph | None = field(default=None, repr=False)
    matrix: SymmetricMatrix | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("laplacian", "sub-laplacian", "symmetric"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 < self.eps0 <= 1:
            raise ValueError("eps0 must lie in (0, 1]")
        if self.l < 1:
            raise ValueError("l must be at least 1")
        if self.s < 2:
            raise ValueError("s must be at least 2")

    def public(self):
        """JSON-friendly view (in-memory inputs omitted)."""
        return {k: v for k, v in self.__dict__.items() if k not in ("graph", "matrix", "output")}


def load_input(cfg: RunConfig):
    """Resolve the configured input to a graph or a symmetric matrix."""
    from .generators import generate_graph
    from .io import load_graph, load_matrix

    if cfg.graph is not None:
        return cfg.graph
    if cfg.matrix is not None:
        return cfg.matrix
    if cfg.input_path is not None:
        if cfg.mode == "symmetric":
            return SymmetricMatrix(load_matrix(cfg.input_path))
        if cfg.mode == "sub-laplacian" and (cfg.format == "mtx" or str(cfg.input_path).endswith(".mtx")):
            from .embed import make_sub_laplacian

            return make_sub_laplacian(load_matrix(cfg.input_path))
        return load_graph(cfg.input_path, cfg.format)
    if cfg.generator is not None:
        spec = dict(cfg.generator)
        family = spec.pop("family")
        seed = spec.pop("seed", None)
        return generate_graph(family, seed=seed, **spec)
    raise GraphError("no input configured")


# ---------------------------------------------------------------------------
# dense oracle


@dataclass(frozen=True)
class ExactSpectrum:
    """Sorted eigenvalues of ``-L`` (or ``-M``) and the induced CDF."""

    eigenvalues: np.ndarray

    def cdf(self, q):
        q = np.asarray(q, dtype=float)
        tol = 1e-9 * np.maximum(1.0, np.abs(q))
        return np.searchsorted(self.eigenvalues, q + tol, side="right") / self.eigenvalues.size


def exact_oracle(obj, cap=4000) -> ExactSpectrum:
    """Dense eigendecomposition of ``-L`` for a graph or ``-M`` for a matrix.

    Raises
    ------
    OracleSizeError
        When the order exceeds ``cap``.
    """
    n = obj.n
    if n > cap:
        raise OracleSizeError(f"dense oracle refused for n={n} > cap={cap}")
    if isinstance(obj, WeightedGraph):
        dense = -obj.laplacian(dense=True)
    else:
        dense = -obj.toarray()
    return ExactSpectrum(np.linalg.eigvalsh(dense))


# ---------------------------------------------------------------------------
# report


@dataclass(eq=False)
class SpectralReport:
    """Per-rate estimation results (arrays share the grid axis).

    ``maxent_F`` is NaN where no prediction is made; ``method`` holds one
    of ``"markov-exact"``, ``"maxent"`` or ``"trivial"``.  ``columns``
    carries extra per-rate series (moments, isotonic values, cover
    abscissae) in output order.
    """

    q: np.ndarray
    k_valid: np.ndarray
    markov_lower: np.ndarray
    markov_upper: np.ndarray
    envelope_lower: np.ndarray
    envelope_upper: np.ndarray
    maxent_F: np.ndarray
    maxent_k: np.ndarray
    method: np.ndarray
    exact_F: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)
    maxent_log: list = field(default_factory=list)
    estimates: MomentEstimates | None = field(default=None, repr=False)

    def __len__(self):
        return self.q.size

    @property
    def estimate(self):
        """Point estimate: the maxent value, or the Markov midpoint when exact."""
        mid = 0.5 * (self.markov_lower + self.markov_upper)
        return np.where(self.method == "markov-exact", mid, self.maxent_F)

    def _table(self):
        cols = {"q": self.q}
        cols.update({k: v for k, v in self.columns.items() if not k.startswith("maxent_F_")})
        cols.update({
            "k_valid": self.k_valid,
            "markov_lower": self.markov_lower,
            "markov_upper": self.markov_upper,
            "envelope_lower": self.envelope_lower,
            "envelope_upper": self.envelope_upper,
            "maxent_F": self.maxent_F,
        })
        cols.update({k: v for k, v in self.columns.items() if k.startswith("maxent_F_")})
        cols["maxent_k"] = self.maxent_k
        cols["method"] = self.method
        if self.exact_F is not None:
            cols["exact_F"] = self.exact_F
        return cols

    @staticmethod
    def _fmt(v):
        if isinstance(v, (str, np.str_)):
            return str(v)
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        v = float(v)
        return "" if math.isnan(v) else repr(v)

    def to_csv(self, path=None):
        """CSV with ``# key: value`` metadata lines; returns the text when ``path`` is None."""
        cols = self._table()
        buf = _io.StringIO()
        for k in sorted(self.metadata):
            buf.write(f"# {k}: {json.dumps(self.metadata[k], sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(cols))
        for i in range(len(self)):
            w.writerow([self._fmt(c[i]) for c in cols.values()])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return text

    def to_json(self, path=None):
        cols = self._table()
        rows = []
        for i in range(len(self)):
            row = {}
            for k, c in cols.items():
                v = c[i]
                if isinstance(v, (str, np.str_)):
                    row[k] = str(v)
                elif isinstance(v, (int, np.integer)):
                    row[k] = int(v)
                else:
                    row[k] = None if math.isnan(float(v)) else float(v)
            rows.append(row)
        text = json.dumps({"metadata": self.metadata, "columns": list(cols), "rows": rows}, indent=1, sort_keys=False)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def write_maxent_log(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["q", "k", "beta", "iterations", "status"])
            for q, k, beta, it, status in self.maxent_log:
                w.writerow([repr(q), k, " ".join(repr(float(b)) for b in beta), it, status])


# ---------------------------------------------------------------------------
# per-rate analysis


def _bounds_or_none(m, a, xi):
    ms = MomentSequence(m, a, 1.0)
    if ms.status == "inadmissible":
        return None
    try:
        return markov_bounds(ms, xi)
    except (SingularMomentError, NumericalDegeneracyError):
        return None


def _envelope(m, r, a, center):
    """Envelope of the Markov bounds over all corners ``m_j +- r_j``."""
    lo, hi = center.lower, center.upper
    k = m.size - 1
    if k == 0 or not np.any(r[:k] > 0):
        return lo, hi
    for signs in itertools.product((-1.0, 1.0), repeat=k):
        mm = m.copy()
        mm[1:] += np.asarray(signs) * r[:k]
        b = _bounds_or_none(mm, a, XI)
        if b is None:
            continue
        lo, hi = min(lo, b.lower), max(hi, b.upper)
    return lo, hi


def _fit_chain(ms, k, warm, max_iter):
    """Maxent fit at order ``k``: warm start from the previous rate, else build up orders."""
    if k in warm:
        model = maxent_fit(ms.prefix(k), init=warm[k], max_iter=max_iter)
        if model.converged:
            return model
    theta = None
    model = None
    for kk in range(1, k + 1):
        model = maxent_fit(ms.prefix(kk), init=theta, max_iter=max_iter)
        theta = model.theta
    return model


def analyse_rate(q, top, mean, stderr, warm=None, max_iter=50):
    """Bounds, validity and prediction at one rate.

    Parameters
    ----------
    q : float
    top : float
        Upper bound on the spectrum of ``-L``; ``Y_q`` lives in ``[q/(q+top), 1]``.
    mean, stderr : array_like
        Estimated ``m_1..m_l`` and their standard errors.
    warm : dict, optional
        ``{k: theta}`` from the neighbouring rate; updated in place with the
        multipliers fitted here.

    Returns
    -------
    dict
    """
    if warm is None:
        warm = {}
    a = q / (q + top)
    m = np.concatenate([[1.0], np.asarray(mean, dtype=float)])
    r = Z95 * np.asarray(stderr, dtype=float)
    ms = MomentSequence(m, a, 1.0)
    out = dict(k_valid=validate_sequence(ms, r), lower=0.0, upper=1.0, env_lower=0.0, env_upper=1.0,
               F=math.nan, maxent_k=0, method="trivial", fits=[])
    k = out["k_valid"]
    bounds = None
    while k >= 1:
        pre = ms.prefix(k)
        if pre.status != "inadmissible":
            try:
                bounds = markov_bounds(pre, XI)
                break
            except (SingularMomentError, NumericalDegeneracyError):
                pass
        k -= 1
    new_warm = {}
    if bounds is None:
        warm.clear()
        return out
    out.update(lower=bounds.lower, upper=bounds.upper)
    mid = 0.5 * (bounds.lower + bounds.upper)
    tight = bounds.width <= max(TIGHT_WINDOW * mid, 1e-12)
    if pre.status == "singular" or tight:
        out.update(method="markov-exact", F=mid, maxent_k=0)
    elif k >= 2:
        for kk in range(k, 1, -1):
            sub = ms.prefix(kk)
            try:
                model = _fit_chain(sub, kk, warm, max_iter)
            except (SingularMomentError, NumericalDegeneracyError):
                continue
            out["fits"].append((kk, model))
            if model.converged:
                new_warm[kk] = model.theta
                if kk < k:
                    # keep bounds consistent with the moments the model matches
                    b2 = markov_bounds(sub, XI)
                    bounds = b2
                    out.update(lower=b2.lower, upper=b2.upper)
                F = tail_probability(model, XI)
                out.update(method="maxent", F=min(max(F, out["lower"]), out["upper"]), F_raw=F, maxent_k=kk)
                k = kk
                break
    env = _envelope(m[: k + 1], r, a, bounds)
    out.update(env_lower=env[0], env_upper=env[1])
    warm.clear()
    warm.update(new_warm)
    return out


# ---------------------------------------------------------------------------
# drivers


def _versions():
    import numba
    import scipy
    import sklearn

    return {"forest_spectra": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "scikit-learn": sklearn.__version__}


def run_grid(g: WeightedGraph, q_values, top, l, s, base_seed, max_iter=50, log=None):
    """Estimate moments on ``q_values`` and analyse every rate (top rate first)."""
    est = estimate_moments(g, q_values, l=l, s=s, base_seed=base_seed)
    G = est.q.size
    res = [None] * G
    warm = {}
    for i in range(G - 1, -1, -1):
        res[i] = analyse_rate(float(est.q[i]), top, est.mean[i], est.stderr[i], warm, max_iter)
        if log is not None:
            for kk, model in res[i]["fits"]:
                log.append((float(est.q[i]), kk, model.beta, model.iterations, model.status))
    return est, res


def _scales(g: WeightedGraph):
    sc = graph_scalars(g)
    if sc.lambda_bar > 0 and sc.spectral_upper > 0:
        return sc, sc.lambda_bar, sc.spectral_upper
    # no edges and no killing: every eigenvalue is 0; any positive scale works
    return sc, 1.0, 2.0


def _graph_report(g: WeightedGraph, cfg: RunConfig, q_values, top, seed, exact: ExactSpectrum | None):
    log = []
    est, res = run_grid(g, q_values, top, cfg.l, cfg.s, seed, cfg.max_iter, log)
    rep = SpectralReport(
        q=est.q.copy(),
        k_valid=np.array([r["k_valid"] for r in res], dtype=np.int64),
        markov_lower=np.array([r["lower"] for r in res]),
        markov_upper=np.array([r["upper"] for r in res]),
        envelope_lower=np.array([r["env_lower"] for r in res]),
        envelope_upper=np.array([r["env_upper"] for r in res]),
        maxent_F=np.array([r["F"] for r in res]),
        maxent_k=np.array([r["maxent_k"] for r in res], dtype=np.int64),
        method=np.array([r["method"] for r in res]),
        maxent_log=log,
        estimates=est,
    )
    for k in range(cfg.l):
        rep.columns[f"m{k + 1}"] = est.mean[:, k]
    for k in range(cfg.l):
        rep.columns[f"se{k + 1}"] = est.stderr[:, k]
    if exact is not None:
        rep.exact_F = exact.cdf(rep.q)
    return rep


def _metadata(cfg, obj, extra):
    meta = {"config": cfg.public(), "versions": _versions(), "n": int(obj.n)}
    if isinstance(obj, WeightedGraph):
        meta["graph_fingerprint"] = obj.fingerprint()
        meta["m"] = int(obj.m)
    else:
        meta["matrix_nnz"] = int(obj.matrix.nnz)
    meta.update(extra)
    return meta


def estimate_cdf(cfg: RunConfig) -> SpectralReport:
    """Run the full estimation described by ``cfg``."""
    obj = load_input(cfg)
    if cfg.mode == "symmetric":
        if isinstance(obj, WeightedGraph):
            obj = SymmetricMatrix(obj.laplacian())
        return _estimate_symmetric(obj, cfg)
    if not isinstance(obj, WeightedGraph):
        from .embed import make_sub_laplacian

        obj = make_sub_laplacian(obj)
    g = obj
    sc, lam, top = _scales(g)
    q0 = cfg.eps0 * lam
    grid = make_grid(q0, top / 2.0, cfg.eps0)
    exact = exact_oracle(g, cfg.exact_cap) if cfg.exact else None
    rep = _graph_report(g, cfg, grid.q_values, top, cfg.base_seed, exact)
    if cfg.isotonic:
        rep.columns["maxent_F_isotonic"] = monotone_fit(rep.q, rep.maxent_F)
    rep.metadata = _metadata(cfg, g, {
        "alpha": sc.alpha, "lambda_bar": sc.lambda_bar, "spectral_upper": sc.spectral_upper,
        "q0": q0, "grid_ratio": grid.ratio, "grid_size": len(grid), "xi": XI,
        "kind": "laplacian" if g.is_laplacian else "sub-laplacian",
    })
    return rep


def _component_seed(base_seed, idx):
    return int(np.random.SeedSequence([int(base_seed), 7919, idx]).generate_state(1)[0])


def _estimate_symmetric(M: SymmetricMatrix, cfg: RunConfig) -> SpectralReport:
    cover: CoverPair = embed(M, cfg.extra_shift)
    c = cover.shift
    sc, lam, top = _scales(cover.L1)
    q0 = cfg.eps0 * lam
    grid = make_grid(q0, top / 2.0, cfg.eps0)
    r1 = _graph_report(cover.L1, cfg, grid.q_values, top, _component_seed(cfg.base_seed, 1), None)
    r2 = _graph_report(cover.L2, cfg, grid.q_values, top, _component_seed(cfg.base_seed, 2), None)
    clip = lambda v: np.clip(v, 0.0, 1.0)  # noqa: E731
    p1, p2 = r1.estimate, r2.estimate
    raw = 2.0 * p2 - p1
    both_exact = (r1.method == "markov-exact") & (r2.method == "markov-exact")
    have = np.isfinite(raw)
    method = np.where(~have, "trivial", np.where(both_exact, "markov-exact", "maxent"))
    rep = SpectralReport(
        q=grid.q_values - c,
        k_valid=np.minimum(r1.k_valid, r2.k_valid),
        markov_lower=clip(2.0 * r2.markov_lower - r1.markov_upper),
        markov_upper=clip(2.0 * r2.markov_upper - r1.markov_lower),
        envelope_lower=clip(2.0 * r2.envelope_lower - r1.envelope_upper),
        envelope_upper=clip(2.0 * r2.envelope_upper - r1.envelope_lower),
        maxent_F=np.where(have, clip(raw), np.nan),
        maxent_k=np.minimum(r1.maxent_k, r2.maxent_k),
        method=method,
        maxent_log=r1.maxent_log + r2.maxent_log,
    )
    rep.columns["q_cover"] = grid.q_values
    for name, r in (("L1", r1), ("L2", r2)):
        for k in range(cfg.l):
            rep.columns[f"{name}_m{k + 1}"] = r.columns[f"m{k + 1}"]
        rep.columns[f"{name}_k_valid"] = r.k_valid
    rep.columns["maxent_F_raw"] = raw
    if cfg.isotonic:
        rep.columns["maxent_F_isotonic"] = monotone_fit(rep.q, rep.maxent_F)
    if cfg.exact:
        rep.exact_F = exact_oracle(M, cfg.exact_cap).cdf(rep.q)
    rep.metadata = _metadata(cfg, M, {
        "shift": c, "abscissa": "q - shift (spectrum of -M)", "alpha": sc.alpha, "lambda_bar": sc.lambda_bar,
        "spectral_upper": sc.spectral_upper, "q0": q0, "grid_ratio": grid.ratio, "grid_size": len(grid),
        "xi": XI, "kind": "symmetric",
    })
    return rep


# ---------------------------------------------------------------------------
# cost benchmark


@dataclass
class BenchReport:
    n: int
    q0: float
    q_max: float
    trajectories: int
    mean_S: float
    stderr_S: float
    mean_R: float
    max_R: int
    S_upper: float
    R_upper: float
    expected_S_exact: float | None
    seconds_per_trajectory: float

    def to_csv(self, path=None):
        d = asdict(self)
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(d))
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in d.values()])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def bench_costs(g: WeightedGraph, q0=None, trajectories=100, base_seed=0, eps0=0.01, q_max=None,
                exact_cap=2000) -> BenchReport:
    """Sampling cost of coupled trajectories from ``q_max`` down to ``q0``.

    ``q0`` defaults to ``eps0 * lambda_bar`` and ``q_max`` to the spectral
    upper bound.  The exact trace value is included when ``n <= exact_cap``.
    """
    sc, lam, top = _scales(g)
    if q0 is None:
        q0 = eps0 * lam
    if q_max is None:
        q_max = max(top, q0)
    t0 = time.perf_counter()
    _, costs = coupled_trajectories(g, q0, q_max, (), trajectories, random_state=base_seed)
    dt = (time.perf_counter() - t0) / trajectories
    S = costs[:, 0].astype(float)
    R = costs[:, 1].astype(float)
    cb = cost_bounds(g, q0, exact=g.n <= exact_cap)
    return BenchReport(
        n=g.n, q0=float(q0), q_max=float(q_max), trajectories=int(trajectories),
        mean_S=float(S.mean()), stderr_S=float(S.std(ddof=1) / math.sqrt(S.size)) if S.size > 1 else math.nan,
        mean_R=float(R.mean()), max_R=int(R.max()), S_upper=cb.S_upper, R_upper=cb.R_upper,
        expected_S_exact=cb.expected_S_exact, seconds_per_trajectory=dt,
    )
