"""Hybrid inference: partition F+ and treat one side variationally.

Three schemes share the machinery:

* JJ99 runs Quickscore on (F2+, F-) first and estimates each transformed
  finding's xi against the resulting posterior odds, so its solves are
  query-local and unrecyclable.
* VFH transforms F1+ first against prior odds (cacheable), replaces the
  priors with the variational posteriors, and runs Quickscore on the rest.
* JH carries the variational e^{xi*theta} factors inside the Quickscore
  subset sum itself.

Orderings decide which findings are transformed for a given budget n:
FDO sorts by ascending parent-set size (structure only, prior-robust);
GDO greedily minimises the running variational bound.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import BadN, EvidenceImpossible
from .exact import (
    brute_force_evidence,
    brute_force_posteriors,
    impossible_positive_findings,
    quickscore_infer,
)
from .network import NoisyOrNetwork, Query
from .variational import (
    EXP_CLAMP,
    XiAssignment,
    XiCache,
    assign_xi,
    conj_dual,
    solve_xi,
    variational_evidence,
    variational_posteriors,
    xi_problem,
)

__all__ = [
    "ALGORITHMS",
    "Counters",
    "HybridConfig",
    "InferenceResult",
    "Partition",
    "infer",
    "infer_brute",
    "infer_jh",
    "infer_jj99",
    "infer_quickscore",
    "infer_vfh",
    "order_fdo",
    "order_gdo",
    "partition",
    "rank_diseases",
]


@dataclass(frozen=True)
class Partition:
    """F+ split into a variational part f1 and an exact part f2."""

    f1: tuple[int, ...]
    f2: tuple[int, ...]
    ordering: str


@dataclass(frozen=True)
class HybridConfig:
    algorithm: str = "vfh"
    solver: str = "cvx"
    ordering: str = "fdo"
    n_variational: int = 2


@dataclass
class Counters:
    xi_solves: int = 0
    cache_hits: int = 0
    exact_terms: int = 0


@dataclass
class InferenceResult:
    """Evidence, per-disease posteriors (dense-index array) and counters."""

    evidence: float
    posteriors: np.ndarray
    counters: Counters = field(default_factory=Counters)
    variational_ms: float = 0.0


def order_fdo(net: NoisyOrNetwork, f_pos) -> tuple[int, ...]:
    """Finding-degree order: ascending |parents(f)|, ties by ascending id.

    Depends only on graph structure, so it is invariant under any prior
    change; the first n entries form F1+ for any budget n.
    """
    return tuple(sorted(f_pos, key=lambda j: (len(net.parents[j]), j)))


def order_gdo(net: NoisyOrNetwork, f_pos, solver: str = "cvx",
              cache: XiCache | None = None) -> tuple[int, ...]:
    """Greedy bound-driven order.

    Starts with all of F+ transformed (prior-odds xi), repeatedly moves to
    the exact side the finding whose removal most decreases the variational
    bound over the remaining set, and emits the reverse removal order, so
    the finding kept transformed longest is transformed first. Ties break
    toward the lowest symptom id. O(|F+|^2) bound evaluations.
    """
    pool = sorted(f_pos)
    if len(pool) <= 1:
        return tuple(pool)
    xi, _, _ = assign_xi(net, pool, solver=solver, cache=cache)
    remaining = list(pool)
    removed = []
    while len(remaining) > 1:
        best_f = None
        best_val = math.inf
        for f in remaining:
            rest = [g for g in remaining if g != f]
            val = variational_evidence(net, rest, xi).value
            if val < best_val:
                best_val = val
                best_f = f
        removed.append(best_f)
        remaining.remove(best_f)
    removed.append(remaining[0])
    return tuple(reversed(removed))


def partition(net, f_pos, n: int, ordering: str = "fdo", solver: str = "cvx",
              cache: XiCache | None = None) -> Partition:
    """First n findings of the chosen order go variational, the rest exact."""
    f_pos = tuple(sorted(f_pos))
    if not 0 <= n <= len(f_pos):
        raise BadN(f"n={n} outside 0..{len(f_pos)}")
    if ordering == "fdo":
        order = order_fdo(net, f_pos)
    elif ordering == "gdo":
        order = order_gdo(net, f_pos, solver=solver, cache=cache)
    else:
        raise ValueError(f"unknown ordering {ordering!r} (expected 'fdo' or 'gdo')")
    return Partition(f1=order[:n], f2=order[n:], ordering=ordering)


def _check_feasible(net, query):
    bad = impossible_positive_findings(net, query.positive)
    if bad:
        raise EvidenceImpossible(
            f"positive finding {bad[0]} has no possible cause (empty parent set, zero leak)"
        )


def _partition_for(net, query, config, cache):
    n_eff = min(config.n_variational, len(query.positive))
    return partition(net, query.positive, n_eff, ordering=config.ordering,
                     solver=config.solver, cache=cache)


def infer_brute(net, query, config=None, cache=None) -> InferenceResult:
    ev = brute_force_evidence(net, query)
    post = brute_force_posteriors(net, query)
    return InferenceResult(ev.value, post, Counters(exact_terms=ev.terms))


def infer_quickscore(net, query, config=None, cache=None) -> InferenceResult:
    ev, post = quickscore_infer(net, query)
    return InferenceResult(ev.value, post, Counters(exact_terms=ev.terms))


def infer_vfh(net, query, config: HybridConfig, cache: XiCache | None = None) -> InferenceResult:
    """Variational-first hybridization.

    Transforms F1+ against prior odds, feeds the variational posteriors into
    the exact step as replacement priors, and reports the product of the
    variational F1+ bound and the exact-step evidence.
    """
    _check_feasible(net, query)
    part = _partition_for(net, query, config, cache)

    t0 = time.perf_counter()
    xi, solves, hits = assign_xi(net, part.f1, solver=config.solver, cache=cache)
    var_ms = (time.perf_counter() - t0) * 1e3

    var_ev = variational_evidence(net, part.f1, xi)
    updated = variational_posteriors(net, part.f1, xi)
    ev2, post = quickscore_infer(net, Query(positive=part.f2, negative=query.negative),
                                 priors=updated)
    return InferenceResult(
        evidence=var_ev.value * ev2.value,
        posteriors=post,
        counters=Counters(xi_solves=solves, cache_hits=hits, exact_terms=ev2.terms),
        variational_ms=var_ms,
    )


def infer_jj99(net, query, config: HybridConfig, cache: XiCache | None = None) -> InferenceResult:
    """Exact-first hybridization.

    Quickscore on (F2+, F-) first; each transformed finding's xi is then
    solved against the resulting posterior odds (CVX) or the odds-free PPF
    form, and the exact posteriors get a per-disease Bernoulli update by
    e^{sum xi*theta}. Posterior-odds solves never touch the shared cache.
    """
    _check_feasible(net, query)
    part = _partition_for(net, query, config, cache)

    ev2, post2 = quickscore_infer(net, Query(positive=part.f2, negative=query.negative))

    t0 = time.perf_counter()
    entries = {}
    for j in part.f1:
        entries[j] = solve_xi(xi_problem(net, j, odds=post2), config.solver)
    var_ms = (time.perf_counter() - t0) * 1e3
    xi = XiAssignment(entries=entries, solver=config.solver, odds_source="posterior")

    joint = variational_evidence(net, part.f1, xi, priors=post2)

    posteriors = post2.copy()
    if part.f1:
        acc = np.zeros(net.n_diseases)
        for j in part.f1:
            acc[net.parents[j]] += entries[j] * net.theta[j]
        idx = np.flatnonzero(acc)
        w = np.exp(np.minimum(acc[idx], EXP_CLAMP))
        q = post2[idx]
        posteriors[idx] = np.clip(w * q / (w * q + (1.0 - q)), 0.0, 1.0)

    return InferenceResult(
        evidence=joint.value * ev2.value,
        posteriors=posteriors,
        counters=Counters(xi_solves=len(part.f1), cache_hits=0, exact_terms=ev2.terms),
        variational_ms=var_ms,
    )


def infer_jh(net, query, config: HybridConfig, cache: XiCache | None = None) -> InferenceResult:
    """Joint hybridization: variational factors ride inside the subset sum.

    Evidence is e^{-sum fstar(xi)} times the inclusion-exclusion sum over
    F2+ subsets with each disease's d+ branch scaled by e^{sum xi*theta};
    posteriors clamp disease i inside that same sum.
    """
    _check_feasible(net, query)
    part = _partition_for(net, query, config, cache)

    t0 = time.perf_counter()
    xi, solves, hits = assign_xi(net, part.f1, solver=config.solver, cache=cache)
    var_ms = (time.perf_counter() - t0) * 1e3

    prefactor = 0.0
    extra = None
    if part.f1:
        acc = np.zeros(net.n_diseases)
        for j in part.f1:
            v = xi.xi(j)
            prefactor -= conj_dual(v)
            acc[net.parents[j]] += v * net.theta[j]
            if net.leak[j] != 0.0:
                prefactor += v * -math.log1p(-float(net.leak[j]))
        idx = np.unique(np.concatenate([net.parents[j] for j in part.f1]))
        extra = (idx, np.exp(np.minimum(acc[idx], EXP_CLAMP)))

    ev, post = quickscore_infer(net, Query(positive=part.f2, negative=query.negative),
                                extra=extra)
    return InferenceResult(
        evidence=math.exp(prefactor) * ev.value,
        posteriors=post,
        counters=Counters(xi_solves=solves, cache_hits=hits, exact_terms=ev.terms),
        variational_ms=var_ms,
    )


def rank_diseases(result: InferenceResult, k: int) -> list[int]:
    """Top-k disease indices by posterior, ties toward the lower index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    post = result.posteriors
    order = np.lexsort((np.arange(len(post)), -post))
    return [int(i) for i in order[: min(k, len(post))]]


ALGORITHMS = {
    "brute": infer_brute,
    "quickscore": infer_quickscore,
    "jj99": infer_jj99,
    "vfh": infer_vfh,
    "jh": infer_jh,
}


def infer(net, query, config: HybridConfig, cache: XiCache | None = None) -> InferenceResult:
    """Dispatch on config.algorithm."""
    try:
        fn = ALGORITHMS[config.algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {config.algorithm!r}") from None
    return fn(net, query, config, cache)
