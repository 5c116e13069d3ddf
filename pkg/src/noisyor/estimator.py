"""sklearn-style estimator facade over the inference engines.

Fitting attaches a validated network (the expert-assessed model plays the
role of training data) and an empty xi cache; prediction maps queries to
per-disease posterior rows. Composes with sklearn tooling: `get_params`,
`set_params` and `clone` all behave normally.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import EvidenceImpossible
from .hybrid import HybridConfig, infer, rank_diseases
from .network import NoisyOrNetwork, Query, load_network
from .variational import XiCache

__all__ = ["NoisyOrDiagnoser", "as_queries"]


def as_queries(queries, net: NoisyOrNetwork) -> list[Query]:
    """Validation helper: coerce Query objects, dicts or id pairs.

    Dicts use the network's original ids (the query file schema); Query
    objects are assumed to already carry dense indices.
    """
    out = []
    for q in queries:
        if isinstance(q, Query):
            for j in q.positive + q.negative:
                net._check_symptom(j)
            out.append(q)
        elif isinstance(q, dict):
            out.append(net.resolve_query(q.get("positive", []), q.get("negative", []),
                                         q.get("label")))
        else:
            pos, neg = q
            out.append(net.resolve_query(pos, neg))
    return out


class NoisyOrDiagnoser(BaseEstimator):
    """Disease diagnosis as an estimator: fit on a network, predict on queries.

    Parameters
    ----------
    algorithm : one of "brute", "quickscore", "jj99", "vfh", "jh"
    solver : "cvx" (prior-aware Newton) or "ppf" (closed form)
    ordering : "fdo" or "gdo" transformation order
    n_variational : findings transformed variationally per query

    `predict_proba` returns one row of per-disease posteriors per query;
    `predict` returns the top-ranked dense disease index.
    """

    def __init__(self, algorithm: str = "vfh", solver: str = "cvx",
                 ordering: str = "fdo", n_variational: int = 2):
        self.algorithm = algorithm
        self.solver = solver
        self.ordering = ordering
        self.n_variational = n_variational

    def fit(self, network, y=None):
        """Attach a NoisyOrNetwork (or a path to its JSON file)."""
        if isinstance(network, (str, bytes)) or hasattr(network, "__fspath__"):
            network = load_network(network)
        if not isinstance(network, NoisyOrNetwork):
            raise TypeError("fit expects a NoisyOrNetwork or a network file path")
        self.network_ = network
        self.cache_ = XiCache()
        self.config_ = HybridConfig(
            algorithm=self.algorithm,
            solver=self.solver,
            ordering=self.ordering,
            n_variational=self.n_variational,
        )
        return self

    def _require_fit(self):
        if not hasattr(self, "network_"):
            raise NotFittedError("this NoisyOrDiagnoser is not fitted yet; call fit first")

    def infer_one(self, query):
        self._require_fit()
        (query,) = as_queries([query], self.network_)
        return infer(self.network_, query, self.config_, self.cache_)

    def predict_proba(self, queries) -> np.ndarray:
        """(n_queries, n_diseases) posterior matrix.

        Queries whose evidence is impossible under the model get a NaN row.
        """
        self._require_fit()
        net = self.network_
        rows = np.full((len(queries), net.n_diseases), np.nan)
        for k, q in enumerate(as_queries(queries, net)):
            try:
                rows[k] = infer(net, q, self.config_, self.cache_).posteriors
            except EvidenceImpossible:
                pass
        return rows

    def predict(self, queries) -> np.ndarray:
        """Top-1 dense disease index per query (-1 for impossible evidence)."""
        self._require_fit()
        net = self.network_
        out = np.full(len(queries), -1, dtype=np.intp)
        for k, q in enumerate(as_queries(queries, net)):
            try:
                result = infer(net, q, self.config_, self.cache_)
            except EvidenceImpossible:
                continue
            out[k] = rank_diseases(result, 1)[0]
        return out

    def score(self, queries, y=None) -> float:
        """Top-1 accuracy against y (or the queries' own labels)."""
        self._require_fit()
        if y is None:
            y = [q.label for q in as_queries(queries, self.network_)]
        if any(label is None for label in y):
            raise ValueError("score needs a label for every query")
        predicted = self.predict(queries)
        y = np.asarray(list(y), dtype=np.intp)
        if len(y) != len(predicted):
            raise ValueError("y length does not match the number of queries")
        return float((predicted == y).mean())
