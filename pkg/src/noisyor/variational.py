"""Conjugate-dual variational machinery.

The positive-finding likelihood 1 - e^{-x} = e^{f(x)} with
f(x) = log(1 - e^{-x}) admits the upper bound

    e^{f(x)} <= e^{xi*x - fstar(xi)},   fstar(xi) = -xi log xi + (xi+1) log(xi+1)

for any xi > 0. Applied per transformed finding this turns the evidence of
a positive set F1 into the factored upper bound

    P(F1|Xi) = e^{-sum_j fstar(xi_j)}
               prod_{i in parents(F1)} [ e^{sum_j xi_j theta_ji} P(d_i+) + P(d_i-) ]

whose per-finding log is convex in xi_j. Two solvers tighten the bound:
CVX, a safeguarded Newton iteration on the prior-aware gradient, and PPF,
the prior-free closed form xi = 1/(e^{sum theta} - 1). Symptoms with
nonzero leak carry a virtual always-present parent (inverse odds 0).

Prior-odds solves depend only on the network, never on the query, so they
are memoised in `XiCache` and recycled across queries.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MissingXi, NoConvergence, NoParents
from .exact import Evidence
from .network import NoisyOrNetwork

__all__ = [
    "XiSolveProblem",
    "XiAssignment",
    "XiCache",
    "conj_f",
    "conj_dual",
    "ppf_xi",
    "bound_gradient",
    "cvx_solve_xi",
    "solve_xi",
    "xi_problem",
    "assign_xi",
    "variational_evidence",
    "variational_posteriors",
]

# Exponents are clamped here before exponentiation; overflow beyond this is
# a legitimately near-certain posterior, not an error.
EXP_CLAMP = 700.0

_BRACKET_CEILING = 1e12


def conj_f(x: float) -> float:
    """f(x) = log(1 - e^{-x}) for x > 0."""
    if not x > 0.0:
        raise DomainError(f"conj_f requires x > 0, got {x!r}")
    return math.log(-math.expm1(-x))


def conj_dual(xi: float) -> float:
    """Convex conjugate fstar(xi) = -xi log xi + (xi+1) log(xi+1), xi > 0."""
    if not xi > 0.0:
        raise DomainError(f"conj_dual requires xi > 0, got {xi!r}")
    return -xi * math.log(xi) + (xi + 1.0) * math.log1p(xi)


def ppf_xi(x: float) -> float:
    """Prior/posterior-free closed form xi = 1/(e^x - 1) for x > 0."""
    if not x > 0.0:
        raise DomainError(f"ppf_xi requires a positive theta sum, got {x!r}")
    xi = math.exp(-x) / -math.expm1(-x)
    if xi == 0.0:
        raise DomainError(f"theta sum {x!r} underflows xi below float range")
    return xi


@dataclass(frozen=True)
class XiSolveProblem:
    """One finding's solve inputs: edge weights and aligned inverse odds."""

    theta: tuple[float, ...]
    odds: tuple[float, ...]
    symptom: int | None = None

    def __post_init__(self):
        if len(self.theta) != len(self.odds):
            raise DomainError("theta and odds lists must be aligned")
        if any(not t > 0.0 for t in self.theta):
            raise DomainError("all theta values must be positive")
        if any(p < 0.0 for p in self.odds):
            raise DomainError("inverse odds must be nonnegative")

    @property
    def theta_sum(self) -> float:
        return math.fsum(self.theta)


def bound_gradient(problem: XiSolveProblem, xi: float) -> float:
    """d/dxi of the log single-finding bound at xi.

    Strictly increasing in xi, so its unique root is the bound minimiser.
    """
    if not xi > 0.0:
        raise DomainError(f"gradient requires xi > 0, got {xi!r}")
    total = math.log(xi / (1.0 + xi))
    for t, p in zip(problem.theta, problem.odds):
        total += t / (p * math.exp(-xi * t) + 1.0)
    return total


def _gradient_slope(problem: XiSolveProblem, xi: float) -> float:
    total = 1.0 / (xi * (1.0 + xi))
    for t, p in zip(problem.theta, problem.odds):
        w = p * math.exp(-xi * t)
        total += t * t * w / ((w + 1.0) ** 2)
    return total


def cvx_solve_xi(problem: XiSolveProblem, tol: float = 1e-10, max_iter: int = 100) -> float:
    """Minimise the prior-aware bound: safeguarded Newton on the gradient.

    Seeds from the PPF value (where the gradient is <= 0), brackets the sign
    change by doubling, and falls back to bisection whenever a Newton step
    leaves the bracket. Convergence is declared on |gradient| < tol, which
    directly certifies stationarity.
    """
    if not problem.theta:
        raise NoParents("cannot solve xi for a finding with no causes")
    seed = ppf_xi(problem.theta_sum)

    lo = hi = seed
    g_lo = bound_gradient(problem, lo)
    while g_lo > 0.0:
        # Float noise can push g(seed) barely positive; back off.
        if abs(g_lo) < tol:
            return lo
        hi, lo = lo, lo / 2.0
        if lo < 5e-324:
            raise NoConvergence("bracket collapsed below float range")
        g_lo = bound_gradient(problem, lo)
    g_hi = bound_gradient(problem, hi)
    while g_hi < 0.0:
        lo = hi
        hi *= 2.0
        if hi > _BRACKET_CEILING:
            raise NoConvergence(f"no gradient sign change below xi = {_BRACKET_CEILING:g}")
        g_hi = bound_gradient(problem, hi)

    xi = seed if lo <= seed <= hi else 0.5 * (lo + hi)
    for _ in range(max_iter):
        g = bound_gradient(problem, xi)
        if abs(g) < tol:
            return xi
        if g < 0.0:
            lo = xi
        else:
            hi = xi
        step = xi - g / _gradient_slope(problem, xi)
        if not lo < step < hi:
            step = 0.5 * (lo + hi)
        xi = step
    g = bound_gradient(problem, xi)
    if abs(g) < 1e-8:
        return xi
    raise NoConvergence(f"|gradient| = {abs(g):.3e} after {max_iter} iterations")


def solve_xi(problem: XiSolveProblem, solver: str = "cvx") -> float:
    if solver == "ppf":
        if not problem.theta:
            raise NoParents("cannot solve xi for a finding with no causes")
        return ppf_xi(problem.theta_sum)
    if solver == "cvx":
        return cvx_solve_xi(problem)
    raise ValueError(f"unknown solver {solver!r} (expected 'cvx' or 'ppf')")


def xi_problem(net: NoisyOrNetwork, j: int, odds=None) -> XiSolveProblem:
    """Build the solve inputs for symptom j.

    `odds=None` uses the network's inverse prior odds; an array substitutes
    per-disease posteriors (parents with posterior exactly 0 drop out: their
    factor is identically 1). Nonzero leak adds the virtual always-present
    parent with inverse odds 0.
    """
    theta = []
    odds_list = []
    priors = net.priors
    for pos, i in enumerate(net.parents[j]):
        t = float(net.theta[j][pos])
        if odds is None:
            p = float((1.0 - priors[i]) / priors[i])
        else:
            q = float(odds[i])
            if q <= 0.0:
                continue
            p = (1.0 - q) / q
        theta.append(t)
        odds_list.append(p)
    if net.leak[j] != 0.0:
        theta.append(-math.log1p(-float(net.leak[j])))
        odds_list.append(0.0)
    return XiSolveProblem(theta=tuple(theta), odds=tuple(odds_list), symptom=j)


@dataclass(frozen=True)
class XiAssignment:
    """Per-transformed-finding xi values plus solver provenance."""

    entries: dict[int, float]
    solver: str = "cvx"
    odds_source: str = "prior"

    def __post_init__(self):
        bad = [j for j, v in self.entries.items() if not v > 0.0]
        if bad:
            raise DomainError(f"xi must be positive; offending symptoms {bad}")

    def xi(self, j: int) -> float:
        try:
            return self.entries[j]
        except KeyError:
            raise MissingXi(f"no xi assigned for symptom {j}") from None


def _solve_fingerprint(net: NoisyOrNetwork, j: int) -> bytes:
    """64-bit hash of symptom j's solve inputs: theta vector, parent odds, leak."""
    priors = net.priors[net.parents[j]]
    h = hashlib.blake2b(digest_size=8)
    h.update(net.theta[j].tobytes())
    h.update(((1.0 - priors) / priors).tobytes())
    h.update(np.float64(net.leak[j]).tobytes())
    return h.digest()


class XiCache:
    """Shared memo of prior-odds xi solves, safe under concurrent readers.

    Keyed by (symptom, solver, input fingerprint), so repeated calls return
    bit-identical values and a prior scramble changes the key. Posterior-
    odds solves are query-local by contract and never enter the cache.
    """

    def __init__(self):
        self._values: dict[tuple, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._values)

    def get(self, net: NoisyOrNetwork, j: int, solver: str = "cvx",
            odds_source: str = "prior") -> float:
        if odds_source != "prior":
            raise ValueError("only prior-odds solves are cacheable")
        key = (j, solver, _solve_fingerprint(net, j))
        with self._lock:
            if key in self._values:
                self.hits += 1
                return self._values[key]
            value = solve_xi(xi_problem(net, j), solver)
            self._values[key] = value
            self.misses += 1
            return value


def assign_xi(net, f1, solver: str = "cvx", cache: XiCache | None = None):
    """Solve xi for every finding in f1 against prior odds.

    Returns (assignment, fresh_solves, cache_hits); uses `cache` when given.
    """
    entries: dict[int, float] = {}
    solves = hits = 0
    for j in f1:
        if cache is not None:
            before = cache.hits
            entries[j] = cache.get(net, j, solver)
            if cache.hits > before:
                hits += 1
            else:
                solves += 1
        else:
            entries[j] = solve_xi(xi_problem(net, j), solver)
            solves += 1
    return XiAssignment(entries=entries, solver=solver, odds_source="prior"), solves, hits


def _exponent_sums(net, f1, xi: XiAssignment):
    """Accumulated sum_j xi_j * theta_ji per disease, plus the leak exponent.

    Returns (touched disease indices ascending, exponents aligned to them,
    scalar leak exponent sum).
    """
    acc = np.zeros(net.n_diseases)
    leak_exp = 0.0
    touched = []
    for j in f1:
        v = xi.xi(j)
        acc[net.parents[j]] += v * net.theta[j]
        touched.append(net.parents[j])
        if net.leak[j] != 0.0:
            leak_exp += v * -math.log1p(-float(net.leak[j]))
    idx = np.unique(np.concatenate(touched)) if touched else np.array([], dtype=np.intp)
    return idx, acc[idx], leak_exp


def variational_evidence(net, f1, xi: XiAssignment, priors=None) -> Evidence:
    """Factored upper bound on P(F1) at the given xi assignment.

    Diseases outside parents(F1) contribute factor 1. `priors` optionally
    substitutes per-disease probabilities (JJ99 evaluates this same form
    against exact-step posteriors).
    """
    f1 = tuple(f1)
    prefactor = 0.0
    for j in f1:
        prefactor -= conj_dual(xi.xi(j))
    idx, exponents, leak_exp = _exponent_sums(net, f1, xi)
    prefactor += leak_exp
    q = (net.priors if priors is None else np.asarray(priors, dtype=np.float64))[idx]
    factors = np.exp(np.minimum(exponents, EXP_CLAMP)) * q + (1.0 - q)
    value = math.exp(prefactor) * float(factors.prod()) if len(idx) else math.exp(prefactor)
    return Evidence(value=value, terms=len(idx))


def variational_posteriors(net, f1, xi: XiAssignment, priors=None) -> np.ndarray:
    """Per-disease Bernoulli posteriors under the transformed findings.

    sigma_i = e^{E_i} q_i / (e^{E_i} q_i + 1 - q_i) with E_i the accumulated
    xi*theta exponent; diseases outside parents(F1) keep their prior.
    """
    base = net.priors if priors is None else np.asarray(priors, dtype=np.float64)
    out = base.copy()
    idx, exponents, _ = _exponent_sums(net, tuple(f1), xi)
    if len(idx):
        w = np.exp(np.minimum(exponents, EXP_CLAMP))
        q = base[idx]
        out[idx] = w * q / (w * q + (1.0 - q))
    return out
