import numpy as np
import pytest

from noisyor import NoisyOrNetwork, Query


@pytest.fixture
def n1():
    """One disease (prior 0.1) causing one symptom with probability 0.5."""
    return NoisyOrNetwork([(0, "d", 0.1)], [(0, "f", 0.0)], [(0, 0, 0.5)])


@pytest.fixture
def n2():
    """Two diseases (priors 0.1, 0.2) both causing one symptom with 0.5."""
    return NoisyOrNetwork(
        [(0, "d1", 0.1), (1, "d2", 0.2)],
        [(0, "f", 0.0)],
        [(0, 0, 0.5), (0, 1, 0.5)],
    )


def random_network(rng, max_diseases=10, max_symptoms=12, max_density=0.4,
                   with_leak=True):
    """Small random network for oracle-equivalence corpora."""
    nd = int(rng.integers(1, max_diseases + 1))
    ns = int(rng.integers(1, max_symptoms + 1))
    density = float(rng.uniform(0.08, max_density))
    edges = []
    for j in range(ns):
        for i in range(nd):
            if rng.random() < density:
                edges.append((j, i, float(rng.uniform(0.05, 0.95))))
    diseases = [(i, f"d{i}", float(rng.uniform(0.01, 0.5))) for i in range(nd)]
    symptoms = []
    for j in range(ns):
        leak = float(rng.uniform(0.001, 0.1)) if with_leak and rng.random() < 0.1 else 0.0
        symptoms.append((j, f"s{j}", leak))
    return NoisyOrNetwork(diseases, symptoms, edges)


def causable_symptoms(net):
    return [j for j in range(net.n_symptoms) if len(net.parents[j]) or net.leak[j] > 0.0]


def random_query(rng, net, max_positive=5, max_negative=4, positive_only=False):
    """Random query whose positives are all causable (evidence stays > 0)."""
    pool = causable_symptoms(net)
    n_pos = int(rng.integers(1, max_positive + 1)) if pool else 0
    n_pos = min(n_pos, len(pool))
    positive = [int(v) for v in rng.choice(pool, size=n_pos, replace=False)] if n_pos else []
    negative = []
    if not positive_only:
        rest = [j for j in range(net.n_symptoms) if j not in set(positive)]
        n_neg = min(int(rng.integers(0, max_negative + 1)), len(rest))
        if n_neg:
            negative = [int(v) for v in rng.choice(rest, size=n_neg, replace=False)]
    return Query(positive=tuple(positive), negative=tuple(negative))


def corpus(seed, n_networks, queries_per_network, positive_only=False, **net_kw):
    """Seeded (network, [queries]) pairs shared by invariant and acceptance tests."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_networks:
        net = random_network(rng, **net_kw)
        if not causable_symptoms(net):
            continue
        queries = [random_query(rng, net, positive_only=positive_only)
                   for _ in range(queries_per_network)]
        out.append((net, [q for q in queries if q.positive or q.negative]))
    return out
