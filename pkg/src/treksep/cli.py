"""Command-line front end.

Every subcommand prints JSON on standard output (a single object, or one
object per line for batches) and diagnostics on standard error.  Exit codes:
0 success, 1 domain error or failed verification, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cluster import find_pure_clusters, fraction_size, purity
from .data import Dataset
from .entailment import (brute_force_min_choke, enumerate_constraints, entailed_rank_bound,
                         min_choke)
from .experiment import ExperimentConfig, rows_to_csv, rows_to_json, run_experiment
from .graph import ChokePair, PathDiagram, parse_path_diagram, t_separates
from .sem import load_model, population_cov, simulate
from .stats import (determinant_rank_test, numerical_rank, pairwise_white_pvalues,
                    sample_corr, sample_cov, screen_correlations, white_pair_test,
                    wishart_tetrad_test)
from .verify import verify_choke_pair

log = logging.getLogger("treksep")


class UsageError(Exception):
    pass


def vertex_set(text: str) -> list[str]:
    """Comma-separated names; the empty string is the empty set."""
    return [t.strip() for t in text.split(",") if t.strip()]


def float_list(text: str) -> list[float]:
    return [float(t) for t in vertex_set(text)]


def int_list(text: str) -> list[int]:
    return [int(t) for t in vertex_set(text)]


def _graph(path: str) -> PathDiagram:
    return parse_path_diagram(Path(path).read_text(encoding="utf-8"))


def _data(path: str) -> Dataset:
    return Dataset.from_csv(Path(path).read_text(encoding="utf-8"))


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError("this operation is randomized and needs an explicit --seed")
    return args.seed


def _trek_dict(t) -> Optional[dict]:
    return None if t is None else {"p1": list(t.p1), "p2": list(t.p2)}


# -- subcommands -------------------------------------------------------------

def cmd_tsep(args) -> int:
    g = _graph(args.graph)
    res = t_separates(g, ChokePair(vertex_set(args.ca), vertex_set(args.cb)),
                      vertex_set(args.a), vertex_set(args.b))
    _emit({"separated": res.separated, "witness": _trek_dict(res.witness)})
    return 0


def cmd_choke(args) -> int:
    g = _graph(args.graph)
    fn = brute_force_min_choke if args.brute_force else min_choke
    pair, size = fn(g, vertex_set(args.a), vertex_set(args.b))
    _emit({"chokeA": list(g.sort(pair.ca)), "chokeB": list(g.sort(pair.cb)), "size": size})
    return 0


def cmd_rank_bound(args) -> int:
    g = _graph(args.graph)
    _emit({"bound": entailed_rank_bound(g, vertex_set(args.a), vertex_set(args.b))})
    return 0


def cmd_constraints(args) -> int:
    g = _graph(args.graph)
    measured = vertex_set(args.measured) if args.measured is not None else None
    for c in enumerate_constraints(g, measured, args.p, args.q, args.allow_large):
        _emit(c.to_dict(g))
    return 0


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    data = simulate(model, args.n, args.seed)
    if args.columns is not None:
        data = data.select(vertex_set(args.columns))
    elif args.measured_only:
        data = data.select(model.graph.measured)
    text = data.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _emit({"out": args.out, "n": data.n, "columns": list(data.columns)})
    else:
        sys.stdout.write(text)
    return 0


def cmd_cov(args) -> int:
    if (args.model is None) == (args.data is None):
        raise UsageError("give exactly one of --model or --data")
    if args.data is not None:
        cov = sample_cov(_data(args.data))
        default_tol = 1e-2
    else:
        model = load_model(args.model)
        seed = _need_seed(args) if args.method == "montecarlo" else None
        cov = population_cov(model, args.method, args.n, seed)
        default_tol = 1e-8 if args.method == "analytic" else 1e-2
    if args.vars is not None:
        cov = cov.restrict(vertex_set(args.vars))
    out = {"names": list(cov.names), "matrix": cov.matrix.tolist(), "n": cov.n}
    if cov.se is not None:
        out["se"] = cov.se.tolist()
    if args.rows is not None or args.cols is not None:
        if args.rows is None or args.cols is None:
            raise UsageError("--rows and --cols go together")
        tol = args.tol if args.tol is not None else default_tol
        out["rank"] = numerical_rank(cov.sub(vertex_set(args.rows), vertex_set(args.cols)), tol)
        out["tol"] = tol
    _emit(out)
    return 0


def cmd_test(args) -> int:
    data = _data(args.data)
    cov = sample_cov(data)
    rows, cols = vertex_set(args.rows), vertex_set(args.cols)
    if args.method == "wishart":
        res = wishart_tetrad_test(cov, rows, cols)
    elif args.method == "bootstrap":
        res = determinant_rank_test(cov, rows, cols, "bootstrap", data, args.n_boot,
                                    _need_seed(args))
    else:
        res = determinant_rank_test(cov, rows, cols, "delta")
    _emit(res.to_dict())
    return 0


def cmd_white(args) -> int:
    data = _data(args.data)
    if args.x is not None or args.y is not None:
        if args.x is None or args.y is None:
            raise UsageError("--x and --y go together")
        res = white_pair_test(data.column(args.x), data.column(args.y))
        _emit({"x": args.x, "y": args.y, "statistic": res.statistic, "p": res.p_value})
        return 0
    pv = pairwise_white_pvalues(data)
    _emit({"pairs": len(pv), "median_p": float(np.median(pv)) if len(pv) else None})
    return 0


def cmd_screen(args) -> int:
    res = screen_correlations(sample_corr(_data(args.data)), args.lo, args.hi)
    _emit(res.to_dict())
    return 0 if res.accepted else 1


def cmd_cluster(args) -> int:
    data = _data(args.data)
    if args.columns is not None:
        data = data.select(vertex_set(args.columns))
    res = find_pure_clusters(data, args.alpha, args.threshold)
    out = res.to_dict()
    if args.truth is not None:
        g = _graph(args.truth)
        out["purity"] = [purity(c, g) for c in res.clusters]
        out["fraction"] = [fraction_size(c, g) for c in res.clusters]
    _emit(out)
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig(sizes=tuple(int_list(args.sizes)), b_values=tuple(float_list(args.b)),
                           d_values=tuple(float_list(args.d)), reps=args.reps, alpha=args.alpha,
                           seed=args.seed, vote_threshold=args.threshold,
                           white=not args.no_white)
    rows = run_experiment(cfg, jobs=args.jobs)
    if args.out:
        Path(args.out).write_text(rows_to_csv(rows), encoding="utf-8")
    sys.stdout.write(rows_to_json(rows) + "\n")
    return 0


def cmd_verify(args) -> int:
    model = load_model(args.model)
    pair = ChokePair(vertex_set(args.ca), vertex_set(args.cb))
    checks = verify_choke_pair(model, pair, vertex_set(args.a), vertex_set(args.b),
                               args.n, args.seed, tol=args.tol, z=args.z)
    ok = all(c.passed for c in checks)
    _emit({"passed": ok, "checks": [c.to_dict() for c in checks]})
    return 0 if ok else 1


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treksep", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def sides(sp, chokes=False):
        sp.add_argument("--a", required=True, help="row set, comma separated")
        sp.add_argument("--b", required=True, help="column set, comma separated")
        if chokes:
            sp.add_argument("--ca", required=True, help='row-side choke set ("" for none)')
            sp.add_argument("--cb", required=True, help='column-side choke set ("" for none)')

    sp = sub.add_parser("tsep", help="decide trek separation")
    sp.add_argument("--graph", required=True)
    sides(sp, chokes=True)
    sp.set_defaults(func=cmd_tsep)

    sp = sub.add_parser("choke", help="smallest separating choke pair")
    sp.add_argument("--graph", required=True)
    sides(sp)
    sp.add_argument("--brute-force", action="store_true", help="use the exhaustive oracle")
    sp.set_defaults(func=cmd_choke)

    sp = sub.add_parser("rank-bound", help="entailed bound on rank cov(A, B)")
    sp.add_argument("--graph", required=True)
    sides(sp)
    sp.set_defaults(func=cmd_rank_bound)

    sp = sub.add_parser("constraints", help="enumerate entailed rank constraints (JSON lines)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--measured", help="variable pool (default: all measured)")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--allow-large", action="store_true")
    sp.set_defaults(func=cmd_constraints)

    sp = sub.add_parser("simulate", help="draw data from a model file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", help="CSV path (default: standard output)")
    sp.add_argument("--columns", help="keep only these columns")
    sp.add_argument("--measured-only", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("cov", help="population or sample covariance")
    sp.add_argument("--model")
    sp.add_argument("--data")
    sp.add_argument("--method", choices=["analytic", "montecarlo"], default="analytic")
    sp.add_argument("--n", type=int, default=1_000_000, help="Monte-Carlo sample count")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--vars", help="restrict to these variables")
    sp.add_argument("--rows", help="with --cols, report the numerical rank of this block")
    sp.add_argument("--cols")
    sp.add_argument("--tol", type=float, help="numerical-rank tolerance")
    sp.set_defaults(func=cmd_cov)

    sp = sub.add_parser("test", help="test a vanishing tetrad or determinant")
    sp.add_argument("--data", required=True)
    sp.add_argument("--rows", required=True)
    sp.add_argument("--cols", required=True)
    sp.add_argument("--method", choices=["wishart", "delta", "bootstrap"], default="wishart")
    sp.add_argument("--n-boot", type=int, default=500)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("white", help="White non-linearity test")
    sp.add_argument("--data", required=True)
    sp.add_argument("--x", help="regressor (omit both for all pairs)")
    sp.add_argument("--y", help="response")
    sp.set_defaults(func=cmd_white)

    sp = sub.add_parser("screen", help="correlation-magnitude screen (exit 1 if rejected)")
    sp.add_argument("--data", required=True)
    sp.add_argument("--lo", type=float, default=0.09)
    sp.add_argument("--hi", type=float, default=0.9)
    sp.set_defaults(func=cmd_screen)

    sp = sub.add_parser("cluster", help="tetrad-vote clustering")
    sp.add_argument("--data", required=True)
    sp.add_argument("--columns")
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--threshold", type=float, default=0.95)
    sp.add_argument("--truth", help="generating graph, to score purity and fraction size")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("experiment", help="replicated five-latent clustering study")
    sp.add_argument("--sizes", default="100,500,1000")
    sp.add_argument("--b", default="0", help="latent cubic weights")
    sp.add_argument("--d", default="0", help="indicator cubic weights")
    sp.add_argument("--reps", type=int, default=100)
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--threshold", type=float, default=0.95)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--no-white", action="store_true", help="skip White tests")
    sp.add_argument("--out", help="also write the CSV table here")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("verify", help="numerical checks of a choke pair on a model")
    sp.add_argument("--model", required=True)
    sides(sp, chokes=True)
    sp.add_argument("--n", type=int, default=200_000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--tol", type=float, default=1e-2, help="numerical-rank tolerance")
    sp.add_argument("--z", type=float, default=3.0, help="standard-error multiple")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"treksep {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"treksep {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
