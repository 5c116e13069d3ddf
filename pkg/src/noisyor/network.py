"""Bipartite noisy-or disease/symptom network: data model, validation, file I/O.

A network couples latent binary disease variables to observable binary
symptom variables. Each edge carries P(f+|d+), the probability that the
disease alone causes the symptom. A symptom is absent only if every present
parent independently fails to cause it (times one minus its leak):

    P(f-|state) = (1 - leak_f) * prod_{i present} P(f-|d_i+)

Everything downstream works with the edge weights theta = -log P(f-|d+),
which are precomputed per symptom at load time. Networks are immutable
after construction; all operations here are pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, UnknownDisease, UnknownSymptom, ValidationError

__all__ = [
    "NoisyOrNetwork",
    "Query",
    "load_network",
    "save_network",
    "load_queries",
    "save_queries",
]


def _check_unit_open(value, what: str) -> float:
    """Validate a probability strictly inside (0, 1)."""
    value = float(value)
    if not math.isfinite(value) or not 0.0 < value < 1.0:
        raise ValidationError(f"{what} must lie strictly in (0, 1), got {value!r}")
    return value


def _check_leak(value, what: str) -> float:
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value < 1.0:
        raise ValidationError(f"{what} must lie in [0, 1), got {value!r}")
    return value


@dataclass(frozen=True)
class Query:
    """One diagnosis case: positive findings, negative findings, optional label.

    Ids are dense network indices. `label` is the ground-truth most likely
    disease when known (used by the accuracy harness).
    """

    positive: tuple[int, ...]
    negative: tuple[int, ...] = ()
    label: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "positive", tuple(sorted(set(self.positive))))
        object.__setattr__(self, "negative", tuple(sorted(set(self.negative))))
        overlap = set(self.positive) & set(self.negative)
        if overlap:
            raise ValidationError(f"findings {sorted(overlap)} are both positive and negative")


class NoisyOrNetwork:
    """Validated, densely indexed noisy-or network.

    Diseases and symptoms are re-indexed 0..n-1 in file order; original ids
    and names are kept as metadata. Edges are stored column-sparse per
    symptom (parent indices ascending) together with the precomputed
    P(f-|d+) and theta values every inference path iterates over.
    """

    def __init__(self, diseases, symptoms, edges):
        """Build from (id, name, prior), (id, name, leak) and (sid, did, p) rows."""
        self.disease_ids: list[int] = []
        self.disease_names: list[str] = []
        priors = []
        self._disease_index: dict[int, int] = {}
        for row in diseases:
            did, name, prior = row
            did = int(did)
            if did in self._disease_index:
                raise ValidationError(f"duplicate disease id {did}")
            self._disease_index[did] = len(self.disease_ids)
            self.disease_ids.append(did)
            self.disease_names.append(str(name))
            priors.append(_check_unit_open(prior, f"prior of disease {did}"))
        self.priors = np.asarray(priors, dtype=np.float64)

        self.symptom_ids: list[int] = []
        self.symptom_names: list[str] = []
        leaks = []
        self._symptom_index: dict[int, int] = {}
        for row in symptoms:
            sid, name, leak = row
            sid = int(sid)
            if sid in self._symptom_index:
                raise ValidationError(f"duplicate symptom id {sid}")
            self._symptom_index[sid] = len(self.symptom_ids)
            self.symptom_ids.append(sid)
            self.symptom_names.append(str(name))
            leaks.append(_check_leak(leak, f"leak of symptom {sid}"))
        self.leak = np.asarray(leaks, dtype=np.float64)

        per_symptom: list[dict[int, float]] = [dict() for _ in self.symptom_ids]
        for sid, did, p in edges:
            sid, did = int(sid), int(did)
            if sid not in self._symptom_index:
                raise ValidationError(f"edge references unknown symptom {sid}")
            if did not in self._disease_index:
                raise ValidationError(f"edge references unknown disease {did}")
            j = self._symptom_index[sid]
            i = self._disease_index[did]
            if i in per_symptom[j]:
                raise ValidationError(f"duplicate edge (symptom {sid}, disease {did})")
            p = float(p)
            if not math.isfinite(p) or not 0.0 < p < 1.0:
                # P(f+|d+) = 1 would make theta infinite; rejected by design.
                raise ValidationError(
                    f"edge (symptom {sid}, disease {did}) probability must lie in (0, 1), got {p!r}"
                )
            per_symptom[j][i] = p

        self.parents: list[np.ndarray] = []
        self.edge_probs: list[np.ndarray] = []
        self.pneg: list[np.ndarray] = []
        self.theta: list[np.ndarray] = []
        child_lists: list[list[int]] = [[] for _ in self.disease_ids]
        for j, row in enumerate(per_symptom):
            idx = np.array(sorted(row), dtype=np.intp)
            probs = np.array([row[i] for i in idx], dtype=np.float64)
            self.parents.append(idx)
            self.edge_probs.append(probs)
            self.pneg.append(1.0 - probs)
            self.theta.append(-np.log1p(-probs))
            for i in idx:
                child_lists[i].append(j)
        self.children: list[np.ndarray] = [
            np.array(c, dtype=np.intp) for c in child_lists
        ]
        self.n_edges = sum(len(p) for p in self.parents)

    @property
    def n_diseases(self) -> int:
        return len(self.disease_ids)

    @property
    def n_symptoms(self) -> int:
        return len(self.symptom_ids)

    def disease_index(self, orig_id: int) -> int:
        try:
            return self._disease_index[orig_id]
        except KeyError:
            raise UnknownDisease(f"no disease with id {orig_id}") from None

    def symptom_index(self, orig_id: int) -> int:
        try:
            return self._symptom_index[orig_id]
        except KeyError:
            raise UnknownSymptom(f"no symptom with id {orig_id}") from None

    def _check_symptom(self, j: int) -> int:
        if not 0 <= j < self.n_symptoms:
            raise UnknownSymptom(f"symptom index {j} out of range")
        return j

    def _check_disease(self, i: int) -> int:
        if not 0 <= i < self.n_diseases:
            raise UnknownDisease(f"disease index {i} out of range")
        return i

    def theta_of(self, j: int, i: int) -> float:
        """Edge weight -log P(f_j-|d_i+); 0 when the edge is absent."""
        parents = self.parents[self._check_symptom(j)]
        pos = int(np.searchsorted(parents, self._check_disease(i)))
        if pos < len(parents) and parents[pos] == i:
            return float(self.theta[j][pos])
        return 0.0

    def parent_set(self, j: int) -> tuple[int, ...]:
        """Diseases that can cause symptom j, ascending index order."""
        return tuple(int(i) for i in self.parents[self._check_symptom(j)])

    def inverse_prior_odds(self, i: int) -> float:
        """p_i = P(d_i-) / P(d_i+)."""
        prior = self.priors[self._check_disease(i)]
        return float((1.0 - prior) / prior)

    def with_priors(self, priors) -> "NoisyOrNetwork":
        """New network sharing this structure with replaced disease priors."""
        priors = np.asarray(priors, dtype=np.float64)
        if priors.shape != self.priors.shape:
            raise ValidationError("replacement priors must cover every disease")
        if not np.all((priors > 0.0) & (priors < 1.0)):
            raise ValidationError("replacement priors must lie strictly in (0, 1)")
        clone = object.__new__(NoisyOrNetwork)
        clone.__dict__.update(self.__dict__)
        clone.priors = priors.copy()
        return clone

    def to_dict(self) -> dict:
        """Canonical plain-data form used by the file format."""
        symptoms = []
        for j, sid in enumerate(self.symptom_ids):
            row = {"id": sid, "name": self.symptom_names[j]}
            if self.leak[j] != 0.0:
                row["leak"] = float(self.leak[j])
            symptoms.append(row)
        return {
            "diseases": [
                {"id": did, "name": self.disease_names[i], "prior": float(self.priors[i])}
                for i, did in enumerate(self.disease_ids)
            ],
            "symptoms": symptoms,
            "edges": [
                [self.symptom_ids[j], self.disease_ids[int(i)], float(p)]
                for j in range(self.n_symptoms)
                for i, p in zip(self.parents[j], self.edge_probs[j])
            ],
        }

    def resolve_query(self, positive, negative, label=None) -> Query:
        """Translate original file ids into a dense-index Query."""
        pos = tuple(self.symptom_index(int(s)) for s in positive)
        neg = tuple(self.symptom_index(int(s)) for s in negative)
        lab = None if label is None else self.disease_index(int(label))
        return Query(positive=pos, negative=neg, label=lab)

    def __repr__(self):
        return (
            f"NoisyOrNetwork(|D|={self.n_diseases}, |S|={self.n_symptoms}, "
            f"edges={self.n_edges})"
        )


def _parse_network_dict(doc: dict) -> NoisyOrNetwork:
    if not isinstance(doc, dict):
        raise ParseError("network file must contain a JSON object")
    for key in ("diseases", "symptoms", "edges"):
        if key not in doc or not isinstance(doc[key], list):
            raise ParseError(f"network file is missing the {key!r} array")
    try:
        diseases = [(d["id"], d.get("name", str(d["id"])), d["prior"]) for d in doc["diseases"]]
        symptoms = [(s["id"], s.get("name", str(s["id"])), s.get("leak", 0.0)) for s in doc["symptoms"]]
        edges = [(e[0], e[1], e[2]) for e in doc["edges"]]
    except (KeyError, TypeError, IndexError) as err:
        raise ParseError(f"malformed network entry: {err}") from err
    return NoisyOrNetwork(diseases, symptoms, edges)


def load_network(path) -> NoisyOrNetwork:
    """Load and validate a network from its JSON file format."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ParseError(f"cannot read network file {path}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"network file {path} is not valid JSON: {err}") from err
    return _parse_network_dict(doc)


def save_network(net: NoisyOrNetwork, path) -> None:
    """Write the canonical JSON form; load(save(net)) round-trips bit-exactly."""
    doc = net.to_dict()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def load_queries(path, net: NoisyOrNetwork) -> list[Query]:
    """Load a JSON Lines query file, resolving ids against `net`."""
    queries = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise ParseError(f"cannot read query file {path}: {err}") from err
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as err:
            raise ParseError(f"{path}:{lineno}: invalid JSON: {err}") from err
        if not isinstance(doc, dict):
            raise ParseError(f"{path}:{lineno}: each line must be a JSON object")
        queries.append(
            net.resolve_query(
                doc.get("positive", []), doc.get("negative", []), doc.get("label")
            )
        )
    return queries


def save_queries(queries, path, net: NoisyOrNetwork) -> None:
    """Write queries as JSON Lines using the network's original ids."""
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            doc = {
                "positive": [net.symptom_ids[j] for j in q.positive],
                "negative": [net.symptom_ids[j] for j in q.negative],
            }
            if q.label is not None:
                doc["label"] = net.disease_ids[q.label]
            fh.write(json.dumps(doc, separators=(",", ":")))
            fh.write("\n")
