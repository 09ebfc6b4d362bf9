"""Command line interface: ``forest-spectra <command> ...``.

Exit codes: 0 success, 1 usage error, 2 input error, 3 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .exceptions import ForestSpectraError, NumericalDegeneracyError, SingularMomentError

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _parse_params(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v.strip())
    return out


def _parse_generator(spec):
    """``family:key=value,key=value`` to a generator dict."""
    family, _, rest = spec.partition(":")
    params = _parse_params([p for p in rest.split(",") if p]) if rest else {}
    return {"family": family, **params}


def _write_text(text, path):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        from .io import ensure_parent

        ensure_parent(path)
        with open(path, "w", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_estimate(args):
    from .pipeline import RunConfig, estimate_cdf

    if (args.graph is None) == (args.generator is None):
        raise UsageError("give exactly one of --graph or --generator")
    cfg = RunConfig(
        input_path=args.graph, format=args.format,
        generator=_parse_generator(args.generator) if args.generator else None,
        mode=args.mode, eps0=args.eps0, l=args.replicas, s=args.samples, base_seed=args.seed,
        exact=args.exact, exact_cap=args.exact_cap, isotonic=args.isotonic, extra_shift=args.extra_shift,
        max_iter=args.max_iter, output=args.output,
    )
    rep = estimate_cdf(cfg)
    _write_text(rep.to_csv(), args.output)
    if args.json:
        rep.to_json(args.json)
    if args.moments_csv and rep.estimates is not None:
        rep.estimates.to_csv(args.moments_csv)
    if args.maxent_log:
        rep.write_maxent_log(args.maxent_log)
    return EXIT_OK


def cmd_generate(args):
    from .generators import generate_graph
    from .io import ensure_parent, write_edgelist, write_matrix

    params = _parse_params(args.params)
    g = generate_graph(args.family, seed=args.seed, **params)
    ensure_parent(args.output)
    if args.format == "mtx":
        write_matrix(g.adjacency(), args.output)
    else:
        desc = f"{args.family} " + " ".join(args.params) + (f" seed={args.seed}" if args.seed is not None else "")
        write_edgelist(g, args.output, comment=desc.strip())
    print(f"wrote {g!r} to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_exact(args):
    from .io import load_graph, load_matrix
    from .pipeline import exact_oracle
    from .embed import SymmetricMatrix

    if args.mode == "symmetric":
        obj = SymmetricMatrix(load_matrix(args.graph))
    else:
        obj = load_graph(args.graph, args.format)
    spec = exact_oracle(obj, args.cap)
    lam = spec.eigenvalues
    lines = ["index,eigenvalue,F"]
    F = spec.cdf(lam)
    lines += [f"{i},{float(x)!r},{float(f)!r}" for i, (x, f) in enumerate(zip(lam, F))]
    _write_text("\n".join(lines), args.output)
    return EXIT_OK


def cmd_bench(args):
    from .io import load_graph
    from .pipeline import bench_costs

    g = load_graph(args.graph, args.format)
    rep = bench_costs(g, q0=args.q0, trajectories=args.trajectories, base_seed=args.seed, eps0=args.eps0)
    _write_text(rep.to_csv(), args.output)
    return EXIT_OK


def cmd_embed(args):
    from .embed import embed
    from .io import ensure_parent, load_matrix, write_edgelist

    cover = embed(load_matrix(args.matrix), args.extra_shift)
    prefix = args.output
    ensure_parent(prefix + "_L1.txt")
    write_edgelist(cover.L1, prefix + "_L1.txt", comment=f"double cover L1 of {args.matrix}; shift {cover.shift!r}")
    write_edgelist(cover.L2, prefix + "_L2.txt", comment=f"double cover L2 of {args.matrix}; shift {cover.shift!r}")
    meta = {"source": args.matrix, "shift": cover.shift, "n": cover.n, "L1": prefix + "_L1.txt",
            "L2": prefix + "_L2.txt", "abscissa": "F(q) of -M is reported at q - shift"}
    with open(prefix + "_meta.json", "w") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")
    return EXIT_OK


def moments_check(payload):
    """Analyse a JSON moment payload (see ``docs/formats.md``)."""
    from .moments import MomentSequence, admissible_interval, markov_bounds, validate_sequence
    from .validation import check_moments

    a = float(payload.get("a", 0.0))
    b = float(payload.get("b", 1.0))
    m = check_moments(payload["moments"], a, b)
    ms = MomentSequence(m, a, b)
    out = {"a": a, "b": b, "l": ms.l, "status": ms.status, "regular_length": ms.regular_length}
    radii = payload.get("radii")
    out["k_valid"] = validate_sequence(ms, radii if radii is not None else np.zeros(ms.l))
    if ms.is_regular:
        lo, hi = admissible_interval(ms)
        out["admissible_interval"] = [lo, hi]
    else:
        out["admissible_interval"] = None
    if "xi" in payload:
        mb = markov_bounds(ms, float(payload["xi"]))
        out["markov_bounds"] = {"xi": float(payload["xi"]), "lower": mb.lower, "upper": mb.upper, "t": mb.t,
                                "method": mb.method}
    return out


def cmd_moments(args):
    if args.action != "check":
        raise UsageError(f"unknown moments action {args.action!r}")
    if args.json == "-":
        payload = json.load(sys.stdin)
    else:
        with open(args.json) as fh:
            payload = json.load(fh)
    items = payload if isinstance(payload, list) else [payload]
    results = [moments_check(p) for p in items]
    _write_text(json.dumps(results if isinstance(payload, list) else results[0], indent=1), args.output)
    return EXIT_OK


def cmd_sample(args):
    from .forest import coupled_trajectory
    from .io import load_graph

    g = load_graph(args.graph, args.format)
    grid = [float(x) for x in args.grid.split(",")] if args.grid else []
    traj = coupled_trajectory(g, args.qmin, args.qmax, grid, random_state=args.seed, record_events=args.events)
    out = {
        "n": g.n, "q_range": list(traj.q_range), "seed": args.seed,
        "cost": {"S": traj.cost.S, "R": traj.cost.R},
        "snapshots": [{"q": q, "roots": traj.snapshots[q].tolist(), "killed": traj.killed[q].tolist()}
                      for q in sorted(traj.snapshots)],
        "next_at_qmax": traj.forest_max.next.tolist(),
    }
    if traj.events is not None:
        out["events"] = [float(e) for e in traj.events]
    _write_text(json.dumps(out), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="forest-spectra", description="Spectral CDF estimation from random spanning forests.")
    from . import __version__

    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def graph_args(sp_, required=True):
        sp_.add_argument("--graph", required=required, help="input file")
        sp_.add_argument("--format", choices=("edgelist", "mtx"), help="guessed from the extension if omitted")

    e = sub.add_parser("estimate", help="estimate the spectral CDF")
    graph_args(e, required=False)
    e.add_argument("--generator", help="e.g. 'er:n=2000,seed=1' instead of --graph")
    e.add_argument("--mode", choices=("laplacian", "sub-laplacian", "symmetric"), default="laplacian")
    e.add_argument("--eps0", type=float, default=0.01)
    e.add_argument("--replicas", type=int, default=4)
    e.add_argument("--samples", type=int, default=400)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--exact", action="store_true", help="add the dense-oracle CDF")
    e.add_argument("--exact-cap", type=int, default=4000)
    e.add_argument("--isotonic", action="store_true", help="add a monotone version of the prediction")
    e.add_argument("--extra-shift", type=float, default=0.0)
    e.add_argument("--max-iter", type=int, default=50)
    e.add_argument("--json", help="also write a JSON mirror here")
    e.add_argument("--moments-csv", help="write the moment estimates here")
    e.add_argument("--maxent-log", help="write (q, k, beta, iterations) of every fit here")
    e.add_argument("-o", "--output", help="CSV output (stdout if omitted)")
    e.set_defaults(func=cmd_estimate)

    g = sub.add_parser("generate", help="write a benchmark graph")
    g.add_argument("family")
    g.add_argument("params", nargs="*", help="key=value parameters")
    g.add_argument("--seed", type=int)
    g.add_argument("--format", choices=("edgelist", "mtx"), default="edgelist")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    x = sub.add_parser("exact", help="dense eigenvalues and CDF")
    graph_args(x)
    x.add_argument("--mode", choices=("laplacian", "symmetric"), default="laplacian")
    x.add_argument("--cap", type=int, default=4000)
    x.add_argument("-o", "--output")
    x.set_defaults(func=cmd_exact)

    b = sub.add_parser("bench", help="trajectory sampling cost against its bounds")
    graph_args(b)
    b.add_argument("--q0", type=float, help="defaults to eps0 * lambda_bar")
    b.add_argument("--eps0", type=float, default=0.01)
    b.add_argument("--trajectories", type=int, default=100)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bench)

    m = sub.add_parser("embed", help="shift and double cover of a symmetric matrix")
    m.add_argument("--matrix", required=True, help="Matrix Market file")
    m.add_argument("--extra-shift", type=float, default=0.0)
    m.add_argument("-o", "--output", required=True, help="output prefix")
    m.set_defaults(func=cmd_embed)

    mo = sub.add_parser("moments", help="moment-sequence utilities")
    mo.add_argument("action", choices=("check",))
    mo.add_argument("--json", required=True, help="JSON payload file ('-' for stdin)")
    mo.add_argument("-o", "--output")
    mo.set_defaults(func=cmd_moments)

    s = sub.add_parser("sample", help="dump one coupled trajectory as JSON")
    graph_args(s)
    s.add_argument("--qmin", type=float, required=True)
    s.add_argument("--qmax", type=float, required=True)
    s.add_argument("--grid", help="comma-separated rates")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--events", action="store_true", help="include every unfreezing threshold")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sample)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"forest-spectra: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalDegeneracyError, SingularMomentError) as exc:
        print(f"forest-spectra: numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ForestSpectraError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"forest-spectra: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
