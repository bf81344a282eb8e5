"""Command-line interface: every subsystem behind a seeded subcommand.

Exit codes: 0 success, 1 usage (bad flags or law files), 2 numeric
failure (non-supercritical law, solver or generation failure), 3
infeasible request (a probe that would need more runs than granted).
Each run prints its fully resolved configuration, master seed included,
before any results, so output is reproducible from the log alone.
"""

from __future__ import annotations

import argparse
import math
import sys


from . import __version__
from .branching_sim import (
    OffspringLaw,
    extinction_frequency,
    g_exponent,
    probe_rows_to_csv,
    tail_exponent_probe,
)
from .core_peeler import core_statistics, k_core
from .degree_model import (
    DegreeSequence,
    core_theory,
    parse_law_arg,
    size_biased,
    theory_constants,
)
from .errors import (
    FpplabError,
    InfeasibleRequestError,
    InvalidArgumentError,
    InvalidLawError,
    LawFormatError,
    NumericError,
    RejectionFailureError,
    SupercriticalityError,
)
from .fpp_engine import diameter_and_flood, explore_replay
from .graph_builder import sample_gnm, sample_gnp, sample_multigraph, sample_simple
from .seeding import Seed
from .sweep_harness import SweepConfig, run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_INFEASIBLE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; contract says 1
        self.print_usage(sys.stderr)
        raise SystemExit2(message)


class SystemExit2(Exception):
    pass


def _print_config(args, names):
    parts = [f"{n}={getattr(args, n)!r}" for n in names]
    print("config: " + " ".join(parts))


def _print_items(items):
    for name, val in items:
        print(f"{name}={val!r}" if isinstance(val, float) else f"{name}={val}")


def _realize(args, seed):
    law = parse_law_arg(args.law)
    seq = DegreeSequence.from_law(law, args.n, seed.derive("sequence"))
    if args.mode == "simple":
        return law, sample_simple(seq, seed, max_attempts=args.max_attempts)
    if args.mode == "multigraph":
        return law, sample_multigraph(seq, seed)
    if args.mode == "gnp":
        return law, sample_gnp(args.n, law.mu / args.n, seed).graph
    if args.mode == "gnm":
        return law, sample_gnm(args.n, int(round(law.mu * args.n / 2)), seed).graph
    raise InvalidArgumentError(f"unknown mode {args.mode!r}")


def _add_graph_flags(p):
    p.add_argument("--n", type=int, required=True, help="number of vertices")
    p.add_argument("--seed", type=int, default=0, help="master seed (all randomness)")
    p.add_argument(
        "--mode",
        default="simple",
        choices=["simple", "multigraph", "gnp", "gnm"],
        help="graph model",
    )
    p.add_argument("--max-attempts", type=int, default=10**5)


def cmd_theory(args) -> int:
    law = parse_law_arg(args.law)
    _print_config(args, ["law", "tol"])
    try:
        tc = theory_constants(law, tol=args.tol)
    except SupercriticalityError as exc:
        _print_items(exc.partial.as_items())
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _print_items(tc.as_items())
    ct = core_theory(law)
    _print_items(
        [
            ("p_hat", ct.p_hat),
            ("h1_at_phat", ct.h1_at_phat),
            ("tilde_q1", ct.tilde_q1),
            ("tilde_nu", ct.tilde_nu),
        ]
    )
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = Seed(args.seed)
    _print_config(args, ["law", "n", "seed", "mode", "out", "unweighted"])
    law, graph = _realize(args, seed)
    if args.unweighted:
        graph = graph.with_weights(None) if graph.weights is None else graph
    graph.dump(args.out)
    print(f"written={args.out} n={graph.n} m={graph.m} simple={int(graph.is_simple)}")
    return EXIT_OK


def cmd_fpp(args) -> int:
    seed = Seed(args.seed)
    _print_config(args, ["law", "n", "seed", "mode", "diameter_mode", "source"])
    law, graph = _realize(args, seed)
    summary = diameter_and_flood(graph, seed, mode=args.diameter_mode)
    tc = theory_constants(law)
    _print_items(summary.as_items())
    logn = math.log(graph.n)
    _print_items(
        [
            ("diam_norm", float(summary.diam_w / logn)),
            ("flood_norm", float(summary.flood_w / logn)),
            ("diam_limit", tc.diam_limit),
            ("flood_limit", tc.flood_limit),
        ]
    )
    if args.source is not None:
        trace = explore_replay(graph, args.source)
        sys.stdout.write(trace.dump_text())
    return EXIT_OK


def cmd_trace(args) -> int:
    seed = Seed(args.seed)
    _print_config(args, ["law", "n", "seed", "mode", "source", "max_steps"])
    law, graph = _realize(args, seed)
    trace = explore_replay(graph, args.source, max_steps=args.max_steps)
    sys.stdout.write(trace.dump_text())
    return EXIT_OK


def cmd_core(args) -> int:
    seed = Seed(args.seed)
    _print_config(args, ["law", "n", "seed", "mode"])
    law, graph = _realize(args, seed)
    core = k_core(graph, 2)
    stats = core_statistics(core, graph.n)
    ct = core_theory(law)
    _print_items(
        [
            ("core_vertices", core.n_vertices),
            ("core_edges", core.n_edges),
            ("size_ratio", stats.size_ratio),
            ("edge_ratio", stats.edge_ratio),
            ("q1_tilde_emp", stats.q1_tilde_emp),
            ("h1_at_phat", ct.h1_at_phat),
            ("lambda_star", ct.tilde_q1),
        ]
    )
    return EXIT_OK


def _offspring_from_args(args) -> OffspringLaw:
    if args.offspring:
        pairs = []
        for part in args.offspring.split(","):
            k, _, p = part.partition(":")
            pairs.append((int(k), float(p)))
        return OffspringLaw.explicit(pairs)
    law = parse_law_arg(args.law)
    return OffspringLaw.from_size_biased(size_biased(law))


def cmd_bp(args) -> int:
    _print_config(
        args,
        ["law", "offspring", "k", "seed", "extinction_runs", "probe_x", "probe_n", "runs"],
    )
    law = _offspring_from_args(args)
    seed = Seed(args.seed)
    lam = law.extinction_prob()
    lam_star = law.dpgf(lam)
    _print_items(
        [
            ("mean", law.mean),
            ("xi_min", law.xi_min),
            ("lambda", lam),
            ("lambda_star", lam_star),
            ("g", g_exponent(law.xi_min, args.k, law.q1, lam_star)),
        ]
    )
    if args.extinction_runs:
        freq, indet = extinction_frequency(law, args.k, args.extinction_runs, seed)
        _print_items([("extinction_freq", freq), ("indeterminate", indet)])
    if args.probe_x and args.probe_n:
        rows = tail_exponent_probe(
            law, args.k, args.probe_x, args.probe_n, args.runs, seed
        )
        csv = probe_rows_to_csv(rows)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(csv)
            print(f"written={args.out}")
        else:
            sys.stdout.write(csv)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        import json

        with open(args.config, "r", encoding="utf-8") as fh:
            config = SweepConfig.from_dict(json.load(fh))
    else:
        if not (args.law and args.n_grid):
            raise SystemExit2("sweep needs --config or (--law and --n-grid)")
        config = SweepConfig(
            law=args.law,
            n_grid=tuple(int(x) for x in args.n_grid.split(",")),
            trials=args.trials,
            master_seed=args.seed,
            mode=args.mode,
            diameter_mode=args.diameter_mode,
            out_csv=args.out,
            out_jsonl=args.jsonl,
            workers=args.workers,
        )
    print(f"config: {config.to_json()}")
    records, aggregates, failures = run_sweep(config, progress=print)
    print(f"records={len(records)} failures={len(failures)}")
    for a in aggregates:
        print(
            f"n={a.n} diam_norm={a.diam_norm_mean:.4f}+-{a.diam_norm_se:.4f} "
            f"flood_norm={a.flood_norm_mean:.4f}+-{a.flood_norm_se:.4f} "
            f"(limits {a.diam_limit:.4f}, {a.flood_limit:.4f})"
        )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="fpplab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fpplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="analytic constants: nu, lambda, lambda_*, "
                                      "Gamma(d_min), diameter and flooding limits")
    p.add_argument("law", help="law descriptor: file path, 'regular 3', '1:0.5,3:0.5', ...")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("gen", help="sample a weighted graph and dump it as text")
    p.add_argument("law")
    _add_graph_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--unweighted", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fpp", help="weighted diameter and flooding time of one sample")
    p.add_argument("law")
    _add_graph_flags(p)
    p.add_argument(
        "--diameter-mode", default="auto", choices=["auto", "exact", "anchored", "brute"]
    )
    p.add_argument("--source", type=int, default=None, help="also dump this source's trace")
    p.set_defaults(func=cmd_fpp)

    p = sub.add_parser("trace", help="exploration-process statistics from one source")
    p.add_argument("law")
    _add_graph_flags(p)
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=None)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("core", help="2-core statistics vs the thinning theory")
    p.add_argument("law")
    _add_graph_flags(p)
    p.set_defaults(func=cmd_core)

    p = sub.add_parser("bp", help="branching process: extinction probability and "
                                  "split-time tail exponents")
    p.add_argument("law", nargs="?", default=None,
                   help="degree law whose size-biased law is the offspring law")
    p.add_argument("--offspring", default=None, help="explicit law, e.g. '0:0.25,2:0.75'")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--extinction-runs", type=int, default=0)
    p.add_argument("--probe-x", type=float, nargs="*", default=None)
    p.add_argument("--probe-n", type=int, nargs="*", default=None)
    p.add_argument("--runs", type=int, default=10**6)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bp)

    p = sub.add_parser("sweep", help="seeded Monte Carlo sweep over an n grid, CSV out")
    p.add_argument("--config", default=None, help="JSON SweepConfig file")
    p.add_argument("--law", default=None)
    p.add_argument("--n-grid", default=None, help="comma-separated, e.g. 1000,10000")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", default="simple",
                   choices=["simple", "multigraph", "gnp", "gnm"])
    p.add_argument("--diameter-mode", default="auto",
                   choices=["auto", "exact", "anchored", "brute"])
    p.add_argument("--out", default=None, help="CSV path (aggregates in *.agg.csv)")
    p.add_argument("--jsonl", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit2 as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LawFormatError, InvalidLawError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleRequestError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericError, SupercriticalityError, RejectionFailureError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FpplabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
