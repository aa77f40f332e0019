"""Command line entry point: ``bograph {generate,expect,oracle,mc,compare}``.

Exit codes: 0 ok, 1 a gated check failed, 2 usage error, 3 resource cap,
4 output path not writable.
"""

import argparse
import math
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from . import analytics, montecarlo, oracle
from .graph_model import (ModelError, ModelParams, collapse, degree_counts, generate_stage1,
                          write_degree_csv, write_edge_list)

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_CAP, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def parse_range(text):
    """``"lo..hi"`` or ``"d"`` to an inclusive list of ints."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo..hi or an integer, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--a", type=float, default=1.0, help="initial attractiveness a > 0 (default 1)")
    p.add_argument("--k", type=int, default=1, help="edges per node k >= 1 (default 1)")
    p.add_argument("--t", type=int, help="number of nodes of the final graph")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed for all randomness (default 0)")
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--mem-cap-mb", type=float, default=oracle.DEFAULT_MEM_CAP_MB,
                   help="memory budget for oracle tables in MiB")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="bograph", description="Preferential attachment graphs with initial attractiveness: "
        "exact sampling, exact expectations, closed forms and Monte Carlo checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="sample one graph and write it")
    g.add_argument("--n", type=int, help="stop after stage one with n nodes (no merging)")
    g.add_argument("--format", choices=["edges", "csv"], default="edges",
                   help="edges: header + 'u v' lines; csv: degree counts 'd,count'")

    e = sub.add_parser("expect", parents=[common], help="closed-form coefficients as CSV")
    e.add_argument("--d", type=parse_range, help="degree range lo..hi for c(d)")
    e.add_argument("--d1", type=parse_range, help="first degree range for c_X")
    e.add_argument("--d2", type=parse_range, help="second degree range for c_X")

    o = sub.add_parser("oracle", parents=[common], help="exact expectations by recurrence")
    o.add_argument("--table", choices=["r", "r2", "EX"], default=None,
                   help="r (default), r2 or EX; --d1/--d2 alone select r2")
    o.add_argument("--d", type=parse_range, help="degree range for r")
    o.add_argument("--d1", type=parse_range, help="first degree range for r2 / EX")
    o.add_argument("--d2", type=parse_range, help="second degree range for r2 / EX")
    o.add_argument("--exact-enum", action="store_true",
                   help="use exact rational enumeration of all outcomes (tiny t only)")

    for name, helptext in (("mc", "Monte Carlo campaign, JSON or CSV report"),
                           ("compare", "oracle, closed form and Monte Carlo side by side")):
        m = sub.add_parser(name, parents=[common], help=helptext)
        m.add_argument("--replicas", type=int, default=1000, help="number of replicas N >= 2")
        m.add_argument("--d", type=parse_range, help="degree range for R(d, t)")
        m.add_argument("--d1", type=parse_range, help="first degree range for X(d1, d2, t)")
        m.add_argument("--d2", type=parse_range, help="second degree range for X(d1, d2, t)")
        m.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")
        if name == "mc":
            m.add_argument("--format", choices=["json", "csv"], default="json")
            m.add_argument("--cov", action="store_true", help="also estimate the covariance grid of R")
            m.add_argument("--tail-c", type=float, nargs="+",
                           help="c values for the tail check of X (first d1, d2 pair)")
    return parser


def _params(args):
    try:
        return ModelParams(args.a, args.k, args.seed)
    except ModelError as exc:
        raise UsageError(str(exc)) from None


def _need_t(args):
    if args.t is None:
        raise UsageError("--t is required")
    if args.t < 1:
        raise UsageError("--t must be >= 1")
    return args.t


@contextmanager
def _output(path, binary=False):
    if path is None:
        yield sys.stdout.buffer if binary else sys.stdout
        return
    try:
        fh = open(path, "wb" if binary else "w")
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


def _pairs(args):
    if (args.d1 is None) != (args.d2 is None):
        raise UsageError("--d1 and --d2 go together")
    if args.d1 is None:
        return []
    return [(d1, d2) for d1 in args.d1 for d2 in args.d2]


# ----------------------------------------------------------------- commands

def cmd_generate(args):
    params = _params(args)
    if args.n is not None and args.t is not None:
        raise UsageError("give either --t or --n")
    if args.n is None:
        t = _need_t(args)
        n = params.k * t
    else:
        n = args.n
        if n < 1:
            raise UsageError("--n must be >= 1")
    start = time.perf_counter()
    graph = generate_stage1(params, n)
    if args.n is None:
        graph = collapse(graph, params.k)
    elapsed = time.perf_counter() - start
    if args.out is None:
        raise UsageError("generate needs --out")
    try:
        if args.format == "edges":
            write_edge_list(graph, params if args.n is None else ModelParams(params.a, 1, params.seed),
                            args.out)
        else:
            write_degree_csv(graph, args.out)
    except OSError as exc:
        raise IOError(f"cannot write {args.out}: {exc.strerror}") from None
    rate = graph.edge_count / elapsed if elapsed > 0 else math.inf
    print(f"t={graph.node_count} edges={graph.edge_count} max_degree={int(graph.degrees.max())} "
          f"seconds={elapsed:.3f} edges_per_second={rate:.4g}")
    return EXIT_OK


def cmd_expect(args):
    params = _params(args)
    pairs = _pairs(args)
    with _output(args.out) as fh:
        if pairs:
            fh.write("d1,d2,c_X,c_X_asym,lower,upper\n")
            for d1, d2 in pairs:
                if min(d1, d2) < params.k:
                    raise UsageError(f"degrees must be >= k={params.k}")
                lo, hi = analytics.cX_bounds(d1, d2, params)
                fh.write(",".join([str(d1), str(d2)] + [_fmt(v) for v in (
                    analytics.coeff_cX(d1, d2, params), analytics.cX_asymptotic(d1, d2, params), lo, hi)]) + "\n")
        else:
            ds = args.d or list(range(params.k, params.k + 21))
            if min(ds) < params.k:
                raise UsageError(f"degrees must be >= k={params.k}")
            t = _need_t(args)
            fh.write("d,c_d,c_d_asym,r_main\n")
            for d in ds:
                fh.write(",".join([str(d)] + [_fmt(v) for v in (
                    analytics.coeff_c(d, params), analytics.coeff_c_asymptotic(d, params),
                    analytics.expected_R_main(d, t, params))]) + "\n")
    return EXIT_OK


def cmd_oracle(args):
    params = _params(args)
    t = _need_t(args)
    k = params.k
    table = args.table or ("r2" if args.d1 is not None else "r")
    if table == "r":
        ds = args.d or list(range(k, k * t + k + 1))
        d_cap = max(ds)
    else:
        pairs = _pairs(args)
        d_cap = max(max(p) for p in pairs) if pairs else k * t + k
    d_cap = max(d_cap, 2 * k)
    if args.exact_enum:
        em = oracle.enumerate_substep(params, t, 1, d_cap, exact=True)
        values = {"r": em.r, "r2": em.r2, "EX": em.f}[table]
    elif table == "r":
        values = oracle.compute_r(params, t, history=False, d_cap=d_cap, mem_cap_mb=args.mem_cap_mb).r_final
    elif table == "r2":
        values = oracle.compute_r2(params, t, d_cap=d_cap, mem_cap_mb=args.mem_cap_mb).r2
    else:
        values = oracle.compute_f(params, t, d_cap=d_cap, mem_cap_mb=args.mem_cap_mb).f
    if table != "r" and not pairs:
        d_all = range(k, k * t + k + 1)
        pairs = ((d1, d2) for d1 in d_all for d2 in d_all)
    with _output(args.out) as fh:
        if table == "r":
            fh.write("t,d,r\n")
            for d in ds:
                fh.write(f"{t},{d},{_fmt(values[d] if d < len(values) else 0.0)}\n")
        else:
            fh.write(f"d1,d2,{table}\n")
            for d1, d2 in pairs:
                fh.write(f"{d1},{d2},{_fmt(values[d1, d2])}\n")
    return EXIT_OK


def _campaign(args, want_cov=False):
    params = _params(args)
    t = _need_t(args)
    if args.replicas < 2:
        raise UsageError("--replicas must be >= 2")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    ds = args.d or list(range(params.k, params.k + 21))
    pairs = _pairs(args)
    stats = ["R"] + (["cov"] if want_cov else []) + (["X"] if pairs else [])
    report = montecarlo.run_campaign(params, t, args.replicas, stats, args.seed, d_values=ds,
                                     pairs=pairs, workers=args.workers)
    return params, t, report


def _oracle_for(params, t, report, mem_cap_mb, want_cov):
    d_cap = max(report.d_values + [max(p) for p in report.pairs] + [2 * params.k])
    try:
        if report.pairs:
            return oracle.compute_f(params, t, d_cap=d_cap, mem_cap_mb=mem_cap_mb)
        if want_cov:
            return oracle.compute_r2(params, t, d_cap=d_cap, mem_cap_mb=mem_cap_mb)
        return oracle.compute_r(params, t, history=False, d_cap=d_cap, mem_cap_mb=mem_cap_mb)
    except oracle.ResourceCapError as exc:
        report.notes.append(f"oracle skipped: {exc}")
        return None


def cmd_mc(args):
    params, t, report = _campaign(args, args.cov)
    table = _oracle_for(params, t, report, args.mem_cap_mb, args.cov)
    if table is not None:
        montecarlo.check_theorem1(report, table)
        if args.cov:
            try:
                scale = montecarlo_scale(params)
            except KeyError:
                scale = None
            montecarlo.check_theorem2(report, table, scale)
        if report.pairs:
            montecarlo.check_X(report, table)
    if args.tail_c:
        if not report.pairs:
            raise UsageError("--tail-c needs --d1/--d2")
        d1, d2 = report.pairs[0]
        tail = montecarlo.check_theorem4(params, d1, d2, t, args.replicas, args.tail_c, args.seed,
                                         workers=args.workers)
        report.tail = tail.tail
        report.comparisons["theorem4"] = tail.comparisons["theorem4"]
        report.notes.extend(tail.notes)
    if args.format == "json":
        with _output(args.out) as fh:
            fh.write(report.to_json() + "\n")
    else:
        if args.out is None:
            raise UsageError("csv output needs --out as a file prefix")
        for path in montecarlo.write_report_csv(report, args.out):
            print(path)
    return EXIT_OK if report.gates_passed() else EXIT_GATE


def montecarlo_scale(params):
    from .calibration import constant
    return constant("theorem2_scale", params)


def cmd_compare(args):
    params, t, report = _campaign(args)
    table = _oracle_for(params, t, report, args.mem_cap_mb, False)
    if table is None:
        raise oracle.ResourceCapError(report.notes[-1])
    v1 = montecarlo.check_theorem1(report, table)
    vx = montecarlo.check_X(report, table) if report.pairs else None
    with _output(args.out) as fh:
        fh.write("d,oracle,closed_form,mc_mean,mc_se,z,passed\n")
        for row in v1["rows"]:
            fh.write(f"{row['d']},{row['oracle']!r},{row['closed_form']!r},{row['mean']!r},"
                     f"{row['se']!r},{row['z']!r},{int(row['passed'])}\n")
        if vx is not None:
            fh.write("\nd1,d2,oracle_EX,cX_t,mc_mean,mc_se,z,ratio_X_over_cXt,passed\n")
            for row in vx["rows"]:
                ratio = row["ratio_to_closed_form"]
                fh.write(f"{row['d1']},{row['d2']},{row['oracle']!r},{row['closed_form']!r},"
                         f"{row['mean']!r},{row['se']!r},{row['z']!r},"
                         f"{'' if ratio is None else repr(ratio)},{int(row['passed'])}\n")
    return EXIT_OK if report.gates_passed() else EXIT_GATE


COMMANDS = {"generate": cmd_generate, "expect": cmd_expect, "oracle": cmd_oracle,
            "mc": cmd_mc, "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ModelError, ValueError) as exc:
        print(f"bograph {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except oracle.ResourceCapError as exc:
        print(f"bograph {args.command}: resource cap: {exc}; try a smaller --t", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"bograph {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
