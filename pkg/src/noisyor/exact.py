"""Reference-exact inference: brute-force enumeration and Quickscore.

Brute force sums P(F|D')P(D') over all 2^|D| disease states and is the
oracle everything else is checked against. Quickscore computes the same
evidence with 2^|F+| signed inclusion-exclusion terms:

    P(F+,F-) = sum_{F' subset of F+} (-1)^|F'|
               prod_f in F- u F' (1 - leak_f)
               prod_i [ prod_{f in F- u F'} P(f-|d_i+) * P(d_i+) + P(d_i-) ]

The signed sum is accumulated in plain 64-bit floats; `max_abs_term` on the
returned evidence is the cancellation diagnostic (largest |term| seen).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvidenceImpossible, TooManyDiseases, TooManyPositiveFindings
from .network import NoisyOrNetwork, Query

__all__ = [
    "Evidence",
    "brute_force_evidence",
    "brute_force_posteriors",
    "impossible_positive_findings",
    "quickscore_evidence",
    "quickscore_posteriors",
    "quickscore_infer",
]

MAX_BRUTE_DISEASES = 25
MAX_POSITIVE_FINDINGS = 20

# Below this magnitude a per-disease factor is not divided out of a term;
# the term is recomputed without it instead (avoids 0/0).
_DIVIDE_OUT_FLOOR = 1e-300

_ENUM_CHUNK = 1 << 16


@dataclass(frozen=True)
class Evidence:
    """Joint probability of the findings plus work/diagnostic counters."""

    value: float
    terms: int
    max_abs_term: float = 0.0


def _enumerate_states(net: NoisyOrNetwork, query: Query):
    """Exact (evidence, per-disease joint P(F, d_i+)) by state enumeration."""
    n = net.n_diseases
    if n > MAX_BRUTE_DISEASES:
        raise TooManyDiseases(f"brute force refused for |D|={n} > {MAX_BRUTE_DISEASES}")
    total = 1 << n
    evidence = 0.0
    joint = np.zeros(n)
    bit = np.arange(n, dtype=np.uint64)
    for start in range(0, total, _ENUM_CHUNK):
        idx = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.uint64)
        states = ((idx[:, None] >> bit) & 1).astype(bool)
        weight = np.where(states, net.priors, 1.0 - net.priors).prod(axis=1)
        for f in query.negative:
            weight *= _pf_neg(net, f, states)
        for f in query.positive:
            weight *= 1.0 - _pf_neg(net, f, states)
        evidence += float(weight.sum())
        joint += states.T @ weight
    return evidence, joint, total


def _pf_neg(net, f, states):
    """P(f-|state) for each enumerated state row."""
    parents = net.parents[f]
    out = np.where(states[:, parents], net.pneg[f], 1.0).prod(axis=1)
    if net.leak[f] != 0.0:
        out = out * (1.0 - net.leak[f])
    return out


def brute_force_evidence(net: NoisyOrNetwork, query: Query) -> Evidence:
    """Exact P(F+,F-) over all 2^|D| disease states."""
    evidence, _, total = _enumerate_states(net, query)
    return Evidence(value=evidence, terms=total)


def brute_force_posteriors(net: NoisyOrNetwork, query: Query) -> np.ndarray:
    """Exact P(d_i+|F+,F-) for every disease, via the same enumeration."""
    evidence, joint, _ = _enumerate_states(net, query)
    if evidence <= 0.0:
        raise EvidenceImpossible("P(F) = 0 under the model")
    return np.clip(joint / evidence, 0.0, 1.0)


def impossible_positive_findings(net: NoisyOrNetwork, f_pos) -> list[int]:
    """Positive findings no disease can cause (empty parent set, zero leak).

    Any such finding makes the evidence exactly zero; signed subset
    summation would instead leave rounding noise, so callers short-circuit
    on this check.
    """
    return [f for f in f_pos if len(net.parents[f]) == 0 and net.leak[f] == 0.0]


class _SubsetEngine:
    """Shared inclusion-exclusion machinery for Quickscore and JH.

    `extra` optionally multiplies the d+ branch of selected diseases by a
    fixed per-disease factor (the e^{sum xi*theta} carried by joint
    hybridization); Quickscore is the extra-free case.
    """

    def __init__(self, net, f_pos, f_neg, priors=None, extra=None):
        if len(f_pos) > MAX_POSITIVE_FINDINGS:
            raise TooManyPositiveFindings(
                f"quickscore refused for |F+|={len(f_pos)} > {MAX_POSITIVE_FINDINGS}"
            )
        self.net = net
        self.f_pos = tuple(f_pos)
        self.priors_full = net.priors if priors is None else np.asarray(priors, dtype=np.float64)

        touched = [net.parents[f] for f in self.f_pos]
        touched += [net.parents[f] for f in f_neg]
        if extra is not None:
            touched.append(np.asarray(extra[0], dtype=np.intp))
        self.touched = (
            np.unique(np.concatenate(touched)) if touched else np.array([], dtype=np.intp)
        )

        q = self.priors_full[self.touched]
        self.qneg = 1.0 - q
        self.scale = q.copy()
        if extra is not None:
            pos = np.searchsorted(self.touched, np.asarray(extra[0], dtype=np.intp))
            self.scale[pos] *= np.asarray(extra[1], dtype=np.float64)

        # F--only prefix, shared by every subset term.
        self.prod_neg = np.ones(len(self.touched))
        self.leak_neg = 1.0
        for f in f_neg:
            pos = np.searchsorted(self.touched, net.parents[f])
            self.prod_neg[pos] *= net.pneg[f]
            self.leak_neg *= 1.0 - net.leak[f]

        self.pos_idx = [np.searchsorted(self.touched, net.parents[f]) for f in self.f_pos]
        self.pos_pneg = [net.pneg[f] for f in self.f_pos]
        self.pos_leakneg = [1.0 - float(net.leak[f]) for f in self.f_pos]

    def run(self, want_posteriors: bool):
        m = len(self.f_pos)
        evidence = 0.0
        max_abs = 0.0
        num = np.zeros(len(self.touched)) if want_posteriors else None
        for mask in range(1 << m):
            prod = self.prod_neg.copy()
            leakfac = self.leak_neg
            mm = mask
            while mm:
                b = (mm & -mm).bit_length() - 1
                mm &= mm - 1
                prod[self.pos_idx[b]] *= self.pos_pneg[b]
                leakfac *= self.pos_leakneg[b]
            sign = -1.0 if (mask.bit_count() & 1) else 1.0
            dplus = prod * self.scale
            factor = dplus + self.qneg
            term = sign * leakfac * float(factor.prod())
            evidence += term
            if abs(term) > max_abs:
                max_abs = abs(term)
            if want_posteriors:
                tiny = factor < _DIVIDE_OUT_FLOOR
                if not tiny.any():
                    num += term * (dplus / factor)
                else:
                    safe_factor = np.where(tiny, 1.0, factor)
                    num += term * np.where(tiny, 0.0, dplus / safe_factor)
                    for k in np.flatnonzero(tiny):
                        rest = np.delete(factor, k)
                        num[k] += sign * leakfac * float(rest.prod()) * dplus[k]
        return evidence, num, max_abs

    def posteriors_from(self, evidence, num):
        if evidence <= 0.0:
            raise EvidenceImpossible("P(F) = 0 under the model")
        out = self.priors_full.copy()
        if len(self.touched):
            out[self.touched] = np.clip(num / evidence, 0.0, 1.0)
        return out


def quickscore_infer(net, query, priors=None, extra=None):
    """One inclusion-exclusion pass returning (Evidence, posteriors).

    `priors` optionally overrides the per-disease priors (the VFH exact step
    runs under variationally updated ones). `extra=(indices, factors)`
    injects JH's per-disease d+ multipliers.
    """
    bad = impossible_positive_findings(net, query.positive)
    if bad:
        raise EvidenceImpossible(f"positive finding {bad[0]} has no possible cause")
    engine = _SubsetEngine(net, query.positive, query.negative, priors=priors, extra=extra)
    evidence, num, max_abs = engine.run(want_posteriors=True)
    ev = Evidence(value=evidence, terms=1 << len(query.positive), max_abs_term=max_abs)
    return ev, engine.posteriors_from(evidence, num)


def quickscore_evidence(net, query, priors=None) -> Evidence:
    """P(F+,F-) via 2^|F+| signed terms; matches brute force within 1e-9 rel."""
    if impossible_positive_findings(net, query.positive):
        return Evidence(value=0.0, terms=1 << len(query.positive))
    engine = _SubsetEngine(net, query.positive, query.negative, priors=priors)
    evidence, _, max_abs = engine.run(want_posteriors=False)
    return Evidence(value=evidence, terms=1 << len(query.positive), max_abs_term=max_abs)


def quickscore_posteriors(net, query, priors=None) -> np.ndarray:
    """P(d_i+|F) for every disease, dividing factor i out of each term.

    Factors below 1e-300 are not divided out; the affected term is
    recomputed without them.
    """
    _, posteriors = quickscore_infer(net, query, priors=priors)
    return posteriors
