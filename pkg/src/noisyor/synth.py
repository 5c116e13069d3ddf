"""Seeded synthetic networks, prior scrambling, query generation, analysis.

Networks are sampled to a target edge density with log-uniform priors and
edge probabilities (medical priors span orders of magnitude, so uniform
sampling would misrepresent the spread). Prior scrambling redraws every
P(d+) from a Bates distribution: the mean of m iid Uniform(0, 2*mean),
which adds Gaussian-like variance while keeping priors inside (0, 1).

Everything is deterministic given its spec's seed: same spec, same bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoEligibleLabel, SpecError
from .network import NoisyOrNetwork, Query
from .variational import EXP_CLAMP, XiAssignment

__all__ = [
    "NetworkSpec",
    "QuerySpec",
    "ScrambleSpec",
    "edge_count",
    "gen_network",
    "gen_network_file",
    "scramble_priors",
    "gen_queries",
    "degree_xi_expectation",
    "estimate_gamma",
    "predicted_logq_variance",
]

# In-memory networks are capped here; larger specs must stream to disk.
MAX_IN_MEMORY_EDGES = 10_000_000

_CHUNK = 1 << 20

QUERY_MODES = ("clean", "random20", "chronic20", "chronic40", "confuse20")

_FALSE_FRACTION = {"clean": 0.0, "random20": 0.2, "chronic20": 0.2,
                   "chronic40": 0.4, "confuse20": 0.2}

# Chronic designation: highest-prior slice of the disease list.
CHRONIC_FRACTION = 0.05

# Minimum children overlap (Jaccard) for a disease to count as a confuser.
CONFUSER_MIN_JACCARD = 0.2


def _check_range(rng_pair, what: str):
    lo, hi = float(rng_pair[0]), float(rng_pair[1])
    if not (0.0 < lo <= hi < 1.0):
        raise SpecError(f"{what} must satisfy 0 < lo <= hi < 1, got ({lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class NetworkSpec:
    n_diseases: int
    n_symptoms: int
    density: float
    prior_range: tuple[float, float] = (1e-4, 0.1)
    edge_prob_range: tuple[float, float] = (0.2, 0.9)
    seed: int = 0

    def validate(self):
        if self.n_diseases < 1 or self.n_symptoms < 1:
            raise SpecError("network shape must be positive")
        if not 0.0 < self.density <= 1.0:
            raise SpecError(f"density must lie in (0, 1], got {self.density}")
        _check_range(self.prior_range, "prior_range")
        _check_range(self.edge_prob_range, "edge_prob_range")


@dataclass(frozen=True)
class QuerySpec:
    mode: str = "clean"
    count: int = 100
    avg_positive: float = 8.0
    avg_negative: float = 4.0
    seed: int = 0

    def validate(self):
        if self.mode not in QUERY_MODES:
            raise SpecError(f"unknown query mode {self.mode!r}; expected one of {QUERY_MODES}")
        if self.count <= 0:
            raise SpecError("count must be positive")
        if self.avg_positive < 0 or self.avg_negative < 0:
            raise SpecError("average finding counts must be nonnegative")


@dataclass(frozen=True)
class ScrambleSpec:
    mean_prior: float
    m: int = 12
    seed: int = 0

    def validate(self):
        if not 0.0 < self.mean_prior < 0.5:
            raise SpecError(f"mean_prior must lie in (0, 0.5), got {self.mean_prior}")
        if self.m < 1:
            raise SpecError("Bates component count m must be >= 1")


def edge_count(spec: NetworkSpec) -> int:
    """Edges the spec will produce: ceil(density * |D| * |S|).

    Products within float rounding of an integer snap to it, so e.g.
    density 0.80 of a 40000x12000 grid is exactly 384e6, not 384e6 + 1.
    """
    spec.validate()
    raw = spec.density * spec.n_diseases * spec.n_symptoms
    nearest = round(raw)
    if abs(raw - nearest) <= 1e-9 * max(1.0, abs(raw)):
        return int(nearest)
    return math.ceil(raw)


def _log_uniform(rng, lo, hi, size):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size=size))


def _sample_rows(spec: NetworkSpec):
    """Yield (priors, then per-chunk (symptom, disease, prob) edge arrays).

    Edges are a uniform without-replacement sample of the |S| x |D| grid,
    drawn chunk-by-chunk with hypergeometric counts so the same stream
    serves both in-memory and file-streaming builds at any scale. Edge
    codes are emitted sorted, i.e. grouped by symptom then disease.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    priors = _log_uniform(rng, *spec.prior_range, spec.n_diseases)
    yield priors

    total = spec.n_diseases * spec.n_symptoms
    needed = edge_count(spec)
    for start in range(0, total, _CHUNK):
        if needed == 0:
            break
        size = min(_CHUNK, total - start)
        remaining = total - start
        if needed == remaining:
            take = size
        else:
            take = int(rng.hypergeometric(needed, remaining - needed, size))
        if take:
            offs = np.sort(rng.choice(size, size=take, replace=False))
            codes = offs.astype(np.int64) + start
            probs = _log_uniform(rng, *spec.edge_prob_range, take)
            yield (codes // spec.n_diseases, codes % spec.n_diseases, probs)
            needed -= take


def gen_network(spec: NetworkSpec) -> NoisyOrNetwork:
    """Generate an in-memory network (refused beyond the edge cap)."""
    count = edge_count(spec)
    if count > MAX_IN_MEMORY_EDGES:
        raise SpecError(
            f"{count} edges exceed the in-memory cap ({MAX_IN_MEMORY_EDGES}); "
            "use gen_network_file to stream to disk"
        )
    stream = _sample_rows(spec)
    priors = next(stream)
    edges = []
    for sym, dis, probs in stream:
        edges.extend(zip(sym.tolist(), dis.tolist(), probs.tolist()))
    return NoisyOrNetwork(
        diseases=[(i, f"D{i}", p) for i, p in enumerate(priors.tolist())],
        symptoms=[(j, f"S{j}", 0.0) for j in range(spec.n_symptoms)],
        edges=edges,
    )


def gen_network_file(spec: NetworkSpec, path) -> int:
    """Stream the generated network straight to its JSON file; returns edge count.

    Same sampling stream as gen_network, so small specs produce identical
    networks either way; this path has no edge cap.
    """
    stream = _sample_rows(spec)
    priors = next(stream)
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('{"diseases":[')
        fh.write(",".join(
            json.dumps({"id": i, "name": f"D{i}", "prior": float(p)}, separators=(",", ":"))
            for i, p in enumerate(priors.tolist())
        ))
        fh.write('],"symptoms":[')
        fh.write(",".join(
            json.dumps({"id": j, "name": f"S{j}"}, separators=(",", ":"))
            for j in range(spec.n_symptoms)
        ))
        fh.write('],"edges":[')
        for sym, dis, probs in stream:
            rows = ",".join(
                f"[{int(s)},{int(d)},{float(p)!r}]"
                for s, d, p in zip(sym, dis, probs)
            )
            if written:
                fh.write(",")
            fh.write(rows)
            written += len(probs)
        fh.write("]}\n")
    return written


def scramble_priors(net: NoisyOrNetwork, spec: ScrambleSpec) -> NoisyOrNetwork:
    """Redraw every disease prior from Bates(m, 0, 2*mean_prior).

    Graph structure, edge probabilities and theta arrays are shared with
    the input network untouched. Draws of exactly zero are rejected and
    redrawn.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = net.n_diseases
    priors = rng.uniform(0.0, 2.0 * spec.mean_prior, size=(n, spec.m)).mean(axis=1)
    while True:
        zero = np.flatnonzero(priors == 0.0)
        if not len(zero):
            break
        priors[zero] = rng.uniform(0.0, 2.0 * spec.mean_prior,
                                   size=(len(zero), spec.m)).mean(axis=1)
    return net.with_priors(priors)


def _weighted_sample(rng, items: np.ndarray, weights: np.ndarray, size: int) -> list[int]:
    if size <= 0 or not len(items):
        return []
    size = min(size, len(items))
    picked = rng.choice(items, size=size, replace=False, p=weights / weights.sum())
    return [int(v) for v in picked]


def _uniform_sample(rng, pool: list[int], size: int) -> list[int]:
    if size <= 0 or not pool:
        return []
    size = min(size, len(pool))
    picked = rng.choice(np.asarray(pool, dtype=np.intp), size=size, replace=False)
    return [int(v) for v in picked]


def _chronic_children(net) -> set[int]:
    k = max(1, round(CHRONIC_FRACTION * net.n_diseases))
    order = np.argsort(-net.priors, kind="stable")[:k]
    pool: set[int] = set()
    for i in order:
        pool.update(int(j) for j in net.children[int(i)])
    return pool


def _confuser_for(net, label: int, child_sets: list[set[int]]) -> int | None:
    """Most children-similar other disease by Jaccard, if similar enough."""
    mine = child_sets[label]
    best, best_sim = None, 0.0
    for i in range(net.n_diseases):
        if i == label or not child_sets[i]:
            continue
        inter = len(mine & child_sets[i])
        if not inter:
            continue
        sim = inter / len(mine | child_sets[i])
        if sim > best_sim:
            best, best_sim = i, sim
    if best is not None and best_sim >= CONFUSER_MIN_JACCARD:
        return best
    return None


def gen_queries(net: NoisyOrNetwork, spec: QuerySpec) -> list[Query]:
    """Draw labelled queries, optionally injecting false positive findings.

    Per query: a label disease (uniform among diseases with children), true
    positives sampled from its children weighted by P(f+|d+), negatives
    from non-children, then per mode a rounded fraction of F+ is replaced
    by false positives -- random non-children, children of the chronic
    (highest-prior) diseases, or children of the most similar disease. At
    least one true positive always survives. Sizes are Poisson around the
    spec averages with a minimum of one positive.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    eligible = [i for i in range(net.n_diseases) if len(net.children[i])]
    if not eligible:
        raise NoEligibleLabel("no disease has any child symptom")
    eligible_arr = np.asarray(eligible, dtype=np.intp)

    child_sets = [set(int(j) for j in net.children[i]) for i in range(net.n_diseases)]
    all_symptoms = set(range(net.n_symptoms))
    chronic_pool = _chronic_children(net) if spec.mode.startswith("chronic") else set()
    confusers: dict[int, int | None] = {}
    frac = _FALSE_FRACTION[spec.mode]

    queries = []
    for _ in range(spec.count):
        label = int(rng.choice(eligible_arr))
        n_pos = max(1, int(rng.poisson(spec.avg_positive)))
        n_neg = int(rng.poisson(spec.avg_negative))

        children = net.children[label]
        weights = np.array([net.edge_probs[int(j)][np.searchsorted(net.parents[int(j)], label)]
                            for j in children])
        positives = _weighted_sample(rng, children, weights, n_pos)

        n_false = min(math.ceil(frac * len(positives)), len(positives) - 1)
        if n_false > 0:
            non_children = all_symptoms - child_sets[label]
            if spec.mode == "random20":
                pool = non_children
            elif spec.mode in ("chronic20", "chronic40"):
                pool = (chronic_pool & non_children) or non_children
            else:  # confuse20
                if label not in confusers:
                    confusers[label] = _confuser_for(net, label, child_sets)
                conf = confusers[label]
                pool = (child_sets[conf] & non_children) if conf is not None else set()
                pool = pool or non_children
            pool = sorted(pool - set(positives))
            injected = _uniform_sample(rng, pool, n_false)
            if injected:
                dropped = set(_uniform_sample(rng, positives, len(injected)))
                positives = [f for f in positives if f not in dropped] + injected

        neg_pool = sorted((all_symptoms - child_sets[label]) - set(positives))
        negatives = _uniform_sample(rng, neg_pool, n_neg)
        queries.append(Query(positive=tuple(positives), negative=tuple(negatives), label=label))
    return queries


def degree_xi_expectation(xi: float, p: float, c: float) -> float:
    """Expected parent-set size consistent with stationarity at xi.

    Under uniform edge weight c and inverse odds p this is
    (1/c) * log(1 + 1/xi) * (p e^c e^{-xi} + 1); strictly decreasing in xi,
    which is what makes ascending-degree ordering equivalent to descending
    xi ordering.
    """
    if not xi > 0.0:
        raise DomainError(f"xi must be positive, got {xi!r}")
    if p < 0.0:
        raise DomainError(f"inverse odds must be nonnegative, got {p!r}")
    if not c > 0.0:
        raise DomainError(f"edge weight must be positive, got {c!r}")
    return (1.0 / c) * math.log1p(1.0 / xi) * (p * math.exp(c) * math.exp(-xi) + 1.0)


def estimate_gamma(net: NoisyOrNetwork, f1, xi: XiAssignment,
                   samples: int = 10_000, seed: int = 0) -> float:
    """Monte Carlo mean over diseases of exp(sum_{j in F1} xi_j theta_ji).

    Always >= 1; exactly 1 for empty F1.
    """
    if samples <= 0:
        raise DomainError("samples must be positive")
    f1 = tuple(f1)
    if not f1:
        return 1.0
    acc = np.zeros(net.n_diseases)
    for j in f1:
        acc[net.parents[j]] += xi.xi(j) * net.theta[j]
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, net.n_diseases, size=samples)
    return float(np.exp(np.minimum(acc[idx], EXP_CLAMP)).mean())


def predicted_logq_variance(gamma: float, p: float, m: int) -> float:
    """Taylor-approximate Var[log Q] = (1/(3m)) / (1 + (1+p)/(gamma-1))^2.

    Increasing in gamma, decreasing in p and in the Bates component count m.
    """
    if not gamma > 1.0:
        raise DomainError(f"gamma must exceed 1, got {gamma!r}")
    if p < 0.0:
        raise DomainError(f"inverse odds must be nonnegative, got {p!r}")
    if m < 1:
        raise DomainError(f"Bates component count must be >= 1, got {m!r}")
    return (1.0 / (3.0 * m)) * (1.0 / (1.0 + (1.0 + p) / (gamma - 1.0))) ** 2
