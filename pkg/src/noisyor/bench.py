"""Benchmark harness: runtime grids, accuracy grids, analysis traces, CSV.

All randomness flows from one seed; named sub-seeds are derived per cell so
row sets are deterministic and timing columns are the only output that can
differ between identically seeded runs. Networks given to the harness are
never mutated; scrambles produce fresh objects.
"""

from __future__ import annotations

import csv
import hashlib
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import EvidenceImpossible, LengthMismatch, SpecError
from .hybrid import ALGORITHMS, HybridConfig, infer, rank_diseases
from .network import NoisyOrNetwork, Query
from .synth import QuerySpec, ScrambleSpec, estimate_gamma, gen_queries, scramble_priors
from .synth import degree_xi_expectation
from .variational import XiAssignment, XiCache

__all__ = [
    "ACCURACY_COLUMNS",
    "RUNTIME_COLUMNS",
    "TRACE_COLUMNS",
    "DEFAULT_ACCURACY_ALGORITHMS",
    "FIGURE_TRACE_SETTINGS",
    "analyze_fdo",
    "parse_algorithm",
    "run_accuracy_experiment",
    "run_runtime_experiment",
    "runtime_queries",
    "top_k_accuracy",
    "write_csv",
]

RUNTIME_COLUMNS = [
    "algorithm", "solver", "ordering", "f_plus", "n_variational", "n_queries",
    "wall_ms_total", "wall_ms_variational_step", "xi_solves", "cache_hits",
    "exact_terms",
]

ACCURACY_COLUMNS = [
    "mode", "mean_prior", "algorithm", "solver", "ordering", "n_variational",
    "top1_accuracy", "top3_accuracy", "n_queries", "failures",
]

TRACE_COLUMNS = ["trace", "p", "c", "x", "y"]

# The prior/edge-weight settings of the degree-vs-xi analysis traces:
# inverse odds for mean priors 0.01/0.001/0.002/0.005 paired with edge
# weights -log(1-P) for P = 0.5/0.6/0.7/0.9.
FIGURE_TRACE_SETTINGS = [
    ((1.0 - 0.01) / 0.01, -math.log(1.0 - 0.5)),
    ((1.0 - 0.001) / 0.001, -math.log(1.0 - 0.6)),
    ((1.0 - 0.002) / 0.002, -math.log(1.0 - 0.7)),
    ((1.0 - 0.005) / 0.005, -math.log(1.0 - 0.9)),
]

DEFAULT_ACCURACY_ALGORITHMS = (
    "quickscore",
    "jj99+cvx+gdo",
    "vfh+cvx+fdo",
    "vfh+ppf+fdo",
    "jh+cvx+fdo",
)

_CACHED_ALGORITHMS = ("vfh", "jh")


def parse_algorithm(text: str, n_variational: int = 2) -> HybridConfig:
    """Parse 'vfh+cvx+fdo' style specs; bare exact algorithms need no tags."""
    parts = text.strip().lower().split("+")
    name = parts[0]
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r} (expected one of {sorted(ALGORITHMS)})")
    solver, ordering = "cvx", "fdo"
    for part in parts[1:]:
        if part in ("cvx", "ppf"):
            solver = part
        elif part in ("fdo", "gdo"):
            ordering = part
        else:
            raise ValueError(f"unknown algorithm tag {part!r} in {text!r}")
    return HybridConfig(algorithm=name, solver=solver, ordering=ordering,
                        n_variational=n_variational)


def _is_hybrid(config: HybridConfig) -> bool:
    return config.algorithm in ("jj99", "vfh", "jh")


def _label(config: HybridConfig):
    if _is_hybrid(config):
        return config.algorithm, config.solver, config.ordering, config.n_variational
    return config.algorithm, "-", "-", 0


def _subseed(seed: int, *tags) -> int:
    """Deterministic named child seed."""
    h = hashlib.blake2b(repr((int(seed),) + tags).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


def top_k_accuracy(rankings, labels, k: int) -> float:
    """Fraction of queries whose label is among the first k ranked diseases."""
    if len(rankings) != len(labels):
        raise LengthMismatch(f"{len(rankings)} rankings vs {len(labels)} labels")
    if not rankings:
        return 0.0
    hits = sum(1 for ranking, label in zip(rankings, labels) if label in ranking[:k])
    return hits / len(rankings)


def runtime_queries(net: NoisyOrNetwork, count: int, n_positive: int,
                    n_negative: int, seed: int) -> list[Query]:
    """Fixed-size random queries for timing runs.

    Positives are accumulated from the children of randomly drawn diseases,
    so they are co-causable and the joint evidence stays far above signed-
    summation noise even at |F+| = 16 (independent rare findings would not).
    """
    rng = np.random.default_rng(seed)
    labels = [i for i in range(net.n_diseases) if len(net.children[i])]
    n_causable = sum(1 for j in range(net.n_symptoms)
                     if len(net.parents[j]) or net.leak[j] > 0.0)
    if not labels or n_causable < n_positive:
        raise SpecError(f"network cannot support {n_positive} co-causable positives")
    queries = []
    for _ in range(count):
        pos: list[int] = []
        seen: set[int] = set()
        attempts = 0
        while len(pos) < n_positive:
            attempts += 1
            if attempts > 50 * n_positive:
                raise SpecError(f"could not accumulate {n_positive} positives")
            label = int(rng.choice(labels))
            for j in rng.permutation(net.children[label]):
                if int(j) not in seen:
                    seen.add(int(j))
                    pos.append(int(j))
                    if len(pos) == n_positive:
                        break
        rest = np.setdiff1d(np.arange(net.n_symptoms, dtype=np.intp),
                            np.asarray(pos, dtype=np.intp))
        neg = rng.choice(rest, size=min(n_negative, len(rest)), replace=False)
        queries.append(Query(positive=tuple(pos),
                             negative=tuple(int(v) for v in neg)))
    return queries


def _prewarm(net, cache: XiCache, solver: str) -> float:
    """Sealed single-threaded cache warm over every transformable symptom.

    Returns the wall time in ms; this is the N-independent part of the
    variational-step cost.
    """
    t0 = time.perf_counter()
    for j in range(net.n_symptoms):
        if len(net.parents[j]) or net.leak[j] > 0.0:
            cache.get(net, j, solver)
    return (time.perf_counter() - t0) * 1e3


def _run_cell(net, queries, config: HybridConfig, repetitions: int):
    """One (algorithm, query set) runtime cell.

    Warm-up pass excluded from wall_ms_total; the variational-step column
    is the pre-warm solve phase plus resolution time in the measured passes.
    """
    cache = XiCache() if config.algorithm in _CACHED_ALGORITHMS else None
    var_ms = _prewarm(net, cache, config.solver) if cache is not None else 0.0

    for q in queries:  # warm-up
        infer(net, q, config, cache)

    wall_ms = 0.0
    xi_solves = cache_hits = exact_terms = 0
    for _ in range(repetitions):
        t0 = time.perf_counter()
        for q in queries:
            result = infer(net, q, config, cache)
            var_ms += result.variational_ms
            xi_solves += result.counters.xi_solves
            cache_hits += result.counters.cache_hits
            exact_terms += result.counters.exact_terms
        wall_ms += (time.perf_counter() - t0) * 1e3
    if cache is not None:
        xi_solves = cache.misses
        cache_hits = cache.hits
    return wall_ms, var_ms, xi_solves, cache_hits, exact_terms


def run_runtime_experiment(net, algorithms, f_plus_grid, n_queries: int = 3,
                           n_negative: int = 4, n_variational: int = 2,
                           repetitions: int = 1, seed: int = 0) -> list[dict]:
    """Wall-time rows over an (algorithm, |F+|) grid on fixed-size queries."""
    configs = [parse_algorithm(a, n_variational) if isinstance(a, str) else a
               for a in algorithms]
    rows = []
    for n_pos in f_plus_grid:
        queries = runtime_queries(net, n_queries, n_pos, n_negative,
                                  _subseed(seed, "runtime", n_pos))
        for config in configs:
            wall, var, solves, hits, terms = _run_cell(net, queries, config, repetitions)
            algorithm, solver, ordering, n_var = _label(config)
            rows.append(dict(zip(RUNTIME_COLUMNS, [
                algorithm, solver, ordering, n_pos, n_var, len(queries),
                wall, var, solves, hits, terms,
            ])))
    return rows


def run_accuracy_experiment(net, modes, mean_prior_grid, algorithms,
                            count: int = 800, avg_positive: float = 8.0,
                            avg_negative: float = 4.0, n_variational: int = 2,
                            m_bates: int = 12, seed: int = 0) -> list[dict]:
    """Top-1/top-3 accuracy over a (mode, scramble mean, algorithm) grid.

    Query sets are generated once per mode from the unscrambled network
    (labels and true positives come from the real structure; chronic
    designation uses the unscrambled priors); every algorithm then runs on
    every scrambled network. EvidenceImpossible queries are counted in the
    failures column, never dropped silently.
    """
    configs = [parse_algorithm(a, n_variational) if isinstance(a, str) else a
               for a in algorithms]
    queries_by_mode = {
        mode: gen_queries(net, QuerySpec(mode=mode, count=count,
                                         avg_positive=avg_positive,
                                         avg_negative=avg_negative,
                                         seed=_subseed(seed, "queries", mode)))
        for mode in modes
    }
    rows = []
    for mode in modes:
        queries = queries_by_mode[mode]
        for mean_prior in mean_prior_grid:
            scrambled = scramble_priors(
                net, ScrambleSpec(mean_prior=mean_prior, m=m_bates,
                                  seed=_subseed(seed, "scramble", repr(float(mean_prior)))))
            cache = XiCache()
            for config in configs:
                hits1 = hits3 = failures = 0
                for q in queries:
                    try:
                        result = infer(scrambled, q, config, cache)
                    except EvidenceImpossible:
                        failures += 1
                        continue
                    top3 = rank_diseases(result, 3)
                    hits1 += top3[0] == q.label
                    hits3 += q.label in top3
                ok = len(queries) - failures
                algorithm, solver, ordering, n_var = _label(config)
                rows.append(dict(zip(ACCURACY_COLUMNS, [
                    mode, float(mean_prior), algorithm, solver, ordering, n_var,
                    hits1 / ok if ok else 0.0,
                    hits3 / ok if ok else 0.0,
                    len(queries), failures,
                ])))
    return rows


def analyze_fdo(net, f1_size: int = 6, n_sets: int = 50, samples: int = 20_000,
                xi_points: int = 40, seed: int = 0) -> list[dict]:
    """Traces behind the transformation-order analysis.

    `degree_vs_xi` rows evaluate the expected parent-set size over a xi grid
    for the four standard (p, c) settings; `gamma_vs_sum_xi` rows pair the
    Monte Carlo gamma of random F1 sets with their total xi (solved by CVX
    against prior odds).
    """
    rows = []
    grid = np.logspace(math.log10(0.01), math.log10(50.0), xi_points)
    for p, c in FIGURE_TRACE_SETTINGS:
        for x in grid:
            rows.append(dict(zip(TRACE_COLUMNS, [
                "degree_vs_xi", p, c, float(x), degree_xi_expectation(float(x), p, c),
            ])))

    cache = XiCache()
    rng = np.random.default_rng(_subseed(seed, "gamma"))
    eligible = np.array([j for j in range(net.n_symptoms) if len(net.parents[j])],
                        dtype=np.intp)
    size = min(f1_size, len(eligible))
    for k in range(n_sets):
        f1 = [int(v) for v in rng.choice(eligible, size=size, replace=False)]
        entries = {j: cache.get(net, j, "cvx") for j in f1}
        xi = XiAssignment(entries=entries, solver="cvx", odds_source="prior")
        gamma = estimate_gamma(net, f1, xi, samples=samples, seed=_subseed(seed, "mc", k))
        rows.append(dict(zip(TRACE_COLUMNS, [
            "gamma_vs_sum_xi", "", "", float(sum(entries.values())), gamma,
        ])))
    return rows


def write_csv(rows, columns, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
