"""Command-line front end.

Subcommands: infer, gen-network, gen-queries, scramble-priors,
bench-runtime, bench-accuracy, analyze-fdo. All tabular output is CSV.
Exit codes: 0 success, 1 inference/model error (message names the error
case), 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

from .bench import (
    ACCURACY_COLUMNS,
    DEFAULT_ACCURACY_ALGORITHMS,
    RUNTIME_COLUMNS,
    TRACE_COLUMNS,
    analyze_fdo,
    parse_algorithm,
    run_accuracy_experiment,
    run_runtime_experiment,
    write_csv,
)
from .errors import NoisyOrError
from .hybrid import ALGORITHMS, HybridConfig, infer, rank_diseases
from .network import load_network, load_queries, save_network, save_queries
from .synth import (
    QUERY_MODES,
    NetworkSpec,
    QuerySpec,
    ScrambleSpec,
    gen_network_file,
    gen_queries,
    scramble_priors,
)
from .variational import XiCache

INFER_COLUMNS = [
    "query", "evidence", "xi_solves", "cache_hits", "exact_terms",
    "rank", "disease_id", "disease_name", "posterior",
]


def _float_pair(text: str):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    return lo, hi


def _float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from None


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _algo_list(text: str):
    specs = [v for v in text.split(",") if v]
    for spec in specs:
        try:
            parse_algorithm(spec)
        except ValueError as err:
            raise argparse.ArgumentTypeError(str(err)) from None
    return specs


def _mode_list(text: str):
    modes = [v for v in text.split(",") if v]
    for mode in modes:
        if mode not in QUERY_MODES:
            raise argparse.ArgumentTypeError(
                f"unknown mode {mode!r}; expected one of {QUERY_MODES}")
    return modes


@contextlib.contextmanager
def _open_output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _cmd_infer(args) -> int:
    net = load_network(args.network)
    queries = load_queries(args.query, net)
    config = HybridConfig(algorithm=args.algorithm, solver=args.solver,
                          ordering=args.ordering, n_variational=args.n_variational)
    cache = XiCache()
    rows = []
    for qi, query in enumerate(queries):
        result = infer(net, query, config, cache)
        for rank, i in enumerate(rank_diseases(result, args.top_k), start=1):
            rows.append(dict(zip(INFER_COLUMNS, [
                qi, result.evidence,
                result.counters.xi_solves, result.counters.cache_hits,
                result.counters.exact_terms,
                rank, net.disease_ids[i], net.disease_names[i],
                float(result.posteriors[i]),
            ])))
    with _open_output(args.output) as fh:
        write_csv(rows, INFER_COLUMNS, fh)
    return 0


def _cmd_gen_network(args) -> int:
    spec = NetworkSpec(
        n_diseases=args.n_diseases, n_symptoms=args.n_symptoms,
        density=args.density, prior_range=args.prior_range,
        edge_prob_range=args.edge_prob_range, seed=args.seed,
    )
    written = gen_network_file(spec, args.output)
    print(f"wrote {written} edges to {args.output}", file=sys.stderr)
    return 0


def _cmd_gen_queries(args) -> int:
    net = load_network(args.network)
    spec = QuerySpec(mode=args.mode, count=args.count,
                     avg_positive=args.avg_positive, avg_negative=args.avg_negative,
                     seed=args.seed)
    save_queries(gen_queries(net, spec), args.output, net)
    return 0


def _cmd_scramble(args) -> int:
    net = load_network(args.network)
    spec = ScrambleSpec(mean_prior=args.mean_prior, m=args.m, seed=args.seed)
    save_network(scramble_priors(net, spec), args.output)
    return 0


def _cmd_bench_runtime(args) -> int:
    net = load_network(args.network)
    rows = run_runtime_experiment(
        net, args.algorithms, args.fplus_grid, n_queries=args.queries,
        n_negative=args.n_negative, n_variational=args.n_variational,
        repetitions=args.repetitions, seed=args.seed,
    )
    with _open_output(args.output) as fh:
        write_csv(rows, RUNTIME_COLUMNS, fh)
    return 0


def _cmd_bench_accuracy(args) -> int:
    net = load_network(args.network)
    rows = run_accuracy_experiment(
        net, args.modes, args.mean_prior_grid, args.algorithms,
        count=args.count, avg_positive=args.avg_positive,
        avg_negative=args.avg_negative, n_variational=args.n_variational,
        m_bates=args.m, seed=args.seed,
    )
    with _open_output(args.output) as fh:
        write_csv(rows, ACCURACY_COLUMNS, fh)
    return 0


def _cmd_analyze_fdo(args) -> int:
    net = load_network(args.network)
    rows = analyze_fdo(net, f1_size=args.f1_size, n_sets=args.sets,
                       samples=args.samples, seed=args.seed)
    with _open_output(args.output) as fh:
        write_csv(rows, TRACE_COLUMNS, fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisyor",
        description="Exact and variational inference on noisy-or disease/symptom networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="run one inference per query, print top-k CSV")
    p.add_argument("--network", required=True)
    p.add_argument("--query", required=True, help="JSON Lines query file")
    p.add_argument("--algorithm", default="quickscore", choices=sorted(ALGORITHMS))
    p.add_argument("--solver", default="cvx", choices=["cvx", "ppf"])
    p.add_argument("--ordering", default="fdo", choices=["fdo", "gdo"])
    p.add_argument("--n-variational", type=int, default=2)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("gen-network", help="generate a synthetic network file")
    p.add_argument("--n-diseases", type=int, required=True)
    p.add_argument("--n-symptoms", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--prior-range", type=_float_pair, default=(1e-4, 0.1))
    p.add_argument("--edge-prob-range", type=_float_pair, default=(0.2, 0.9))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_gen_network)

    p = sub.add_parser("gen-queries", help="generate labelled queries for a network")
    p.add_argument("--network", required=True)
    p.add_argument("--mode", default="clean", choices=QUERY_MODES)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--avg-positive", type=float, default=8.0)
    p.add_argument("--avg-negative", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_gen_queries)

    p = sub.add_parser("scramble-priors", help="redraw priors from a Bates distribution")
    p.add_argument("--network", required=True)
    p.add_argument("--mean-prior", type=float, required=True)
    p.add_argument("--m", type=int, default=12, help="Bates component count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_scramble)

    p = sub.add_parser("bench-runtime", help="wall-time grid over algorithms and |F+|")
    p.add_argument("--network", required=True)
    p.add_argument("--algorithms", type=_algo_list, default=["quickscore", "vfh+cvx+fdo"])
    p.add_argument("--fplus-grid", type=_int_list, default=[8, 10, 12, 14, 16])
    p.add_argument("--queries", type=int, default=3, help="queries per grid cell")
    p.add_argument("--n-negative", type=int, default=4)
    p.add_argument("--n-variational", type=int, default=2)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_bench_runtime)

    p = sub.add_parser("bench-accuracy", help="accuracy grid over modes, priors, algorithms")
    p.add_argument("--network", required=True)
    p.add_argument("--modes", type=_mode_list,
                   default=["random20", "chronic20", "chronic40", "confuse20"])
    p.add_argument("--mean-prior-grid", type=_float_list,
                   default=[0.001, 0.002, 0.005, 0.01, 0.02, 0.05])
    p.add_argument("--algorithms", type=_algo_list,
                   default=list(DEFAULT_ACCURACY_ALGORITHMS))
    p.add_argument("--count", type=int, default=800, help="queries per mode")
    p.add_argument("--avg-positive", type=float, default=8.0)
    p.add_argument("--avg-negative", type=float, default=4.0)
    p.add_argument("--n-variational", type=int, default=2)
    p.add_argument("--m", type=int, default=12, help="Bates component count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_bench_accuracy)

    p = sub.add_parser("analyze-fdo", help="degree-vs-xi and gamma traces as CSV")
    p.add_argument("--network", required=True)
    p.add_argument("--f1-size", type=int, default=6)
    p.add_argument("--sets", type=int, default=50)
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_analyze_fdo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoisyOrError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
