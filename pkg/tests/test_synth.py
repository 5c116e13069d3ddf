import math

import numpy as np
import pytest

from noisyor import (
    DomainError,
    NetworkSpec,
    NoisyOrNetwork,
    QuerySpec,
    ScrambleSpec,
    SpecError,
    XiAssignment,
    degree_xi_expectation,
    estimate_gamma,
    gen_network,
    gen_network_file,
    gen_queries,
    load_network,
    predicted_logq_variance,
    scramble_priors,
)
from noisyor.synth import edge_count

FIGURE_SETTINGS = [
    ((1 - 0.01) / 0.01, -math.log(1 - 0.5)),
    ((1 - 0.001) / 0.001, -math.log(1 - 0.6)),
    ((1 - 0.002) / 0.002, -math.log(1 - 0.7)),
    ((1 - 0.005) / 0.005, -math.log(1 - 0.9)),
]


class TestGenNetwork:
    def test_f120_like_edge_count(self):
        spec = NetworkSpec(n_diseases=665, n_symptoms=1276, density=0.0124, seed=1)
        count = edge_count(spec)
        assert count == math.ceil(0.0124 * 665 * 1276)
        assert abs(count - 10552) <= 0.01 * 10552  # Table-3 proximity
        net = gen_network(spec)
        assert net.n_edges == count

    def test_s1_like_edge_count_and_cap(self):
        spec = NetworkSpec(n_diseases=40_000, n_symptoms=12_000, density=0.80, seed=1)
        assert edge_count(spec) == 384_000_000
        with pytest.raises(SpecError):
            gen_network(spec)  # streaming only at this scale

    def test_deterministic_under_seed(self):
        spec = NetworkSpec(n_diseases=30, n_symptoms=20, density=0.1, seed=42)
        assert gen_network(spec).to_dict() == gen_network(spec).to_dict()

    def test_different_seeds_differ(self):
        a = gen_network(NetworkSpec(30, 20, 0.1, seed=1))
        b = gen_network(NetworkSpec(30, 20, 0.1, seed=2))
        assert a.to_dict() != b.to_dict()

    def test_parentless_symptom_retained(self):
        net = gen_network(NetworkSpec(n_diseases=5, n_symptoms=40, density=0.01, seed=3))
        assert net.n_symptoms == 40
        assert any(len(net.parents[j]) == 0 for j in range(net.n_symptoms))

    def test_values_within_ranges(self):
        spec = NetworkSpec(20, 20, 0.2, prior_range=(1e-3, 0.05),
                           edge_prob_range=(0.3, 0.7), seed=9)
        net = gen_network(spec)
        assert np.all((net.priors >= 1e-3) & (net.priors <= 0.05))
        for j in range(net.n_symptoms):
            if len(net.edge_probs[j]):
                assert np.all((net.edge_probs[j] >= 0.3) & (net.edge_probs[j] <= 0.7))

    def test_stream_matches_in_memory(self, tmp_path):
        spec = NetworkSpec(n_diseases=25, n_symptoms=15, density=0.15, seed=17)
        path = tmp_path / "net.json"
        written = gen_network_file(spec, path)
        direct = gen_network(spec)
        assert written == direct.n_edges
        assert load_network(path).to_dict() == direct.to_dict()

    def test_bad_spec(self):
        with pytest.raises(SpecError):
            gen_network(NetworkSpec(0, 5, 0.1))
        with pytest.raises(SpecError):
            gen_network(NetworkSpec(5, 5, 0.0))
        with pytest.raises(SpecError):
            gen_network(NetworkSpec(5, 5, 0.1, prior_range=(0.5, 0.1)))


class TestScramblePriors:
    def test_m_one_is_plain_uniform(self):
        net = gen_network(NetworkSpec(5000, 3, 0.2, seed=2))
        scrambled = scramble_priors(net, ScrambleSpec(mean_prior=0.2, m=1, seed=5))
        p = scrambled.priors
        assert np.all((p > 0.0) & (p < 0.4))
        # Uniform(0, 0.4): thirds of the range hold thirds of the mass.
        for lo in (0.0, 0.4 / 3, 0.8 / 3):
            frac = np.mean((p >= lo) & (p < lo + 0.4 / 3))
            assert frac == pytest.approx(1 / 3, abs=0.04)

    def test_bates_moments(self):
        """Mean within 4 sigma, variance within 5% of (1/12m)(2*mean)^2."""
        n = 100_000
        net = NoisyOrNetwork(
            [(i, f"d{i}", 0.1) for i in range(n)], [(0, "s", 0.0)], [(0, 0, 0.5)],
        )
        mean_prior, m = 0.1, 12
        p = scramble_priors(net, ScrambleSpec(mean_prior=mean_prior, m=m, seed=8)).priors
        var = (1.0 / (12 * m)) * (2 * mean_prior) ** 2
        assert abs(p.mean() - mean_prior) < 4 * math.sqrt(var / n)
        assert abs(p.var() - var) < 0.05 * var

    def test_structure_untouched(self):
        net = gen_network(NetworkSpec(20, 15, 0.2, seed=3))
        scrambled = scramble_priors(net, ScrambleSpec(mean_prior=0.05, seed=4))
        assert scrambled.parents is net.parents
        assert scrambled.theta is net.theta
        assert not np.array_equal(scrambled.priors, net.priors)

    def test_deterministic(self):
        net = gen_network(NetworkSpec(20, 15, 0.2, seed=3))
        a = scramble_priors(net, ScrambleSpec(mean_prior=0.05, seed=4)).priors
        b = scramble_priors(net, ScrambleSpec(mean_prior=0.05, seed=4)).priors
        assert np.array_equal(a, b)

    def test_bad_spec(self):
        net = gen_network(NetworkSpec(5, 5, 0.2, seed=3))
        with pytest.raises(SpecError):
            scramble_priors(net, ScrambleSpec(mean_prior=0.5))
        with pytest.raises(SpecError):
            scramble_priors(net, ScrambleSpec(mean_prior=0.1, m=0))


@pytest.fixture(scope="module")
def query_net():
    # Dense enough that Poisson(8) positives rarely exhaust a label's children.
    return gen_network(NetworkSpec(n_diseases=100, n_symptoms=200, density=0.1, seed=11))


class TestGenQueries:
    def test_sizes_near_averages(self, query_net):
        spec = QuerySpec(mode="clean", count=800, avg_positive=8, avg_negative=4, seed=12)
        queries = gen_queries(query_net, spec)
        assert len(queries) == 800
        mean_pos = np.mean([len(q.positive) for q in queries])
        mean_neg = np.mean([len(q.negative) for q in queries])
        assert abs(mean_pos - 8) < 0.8
        assert abs(mean_neg - 4) < 0.4

    def test_clean_mode_all_true_positives(self, query_net):
        spec = QuerySpec(mode="clean", count=50, seed=13)
        for q in gen_queries(query_net, spec):
            children = set(int(j) for j in query_net.children[q.label])
            assert set(q.positive) <= children

    def test_random20_fraction_exact(self, query_net):
        spec = QuerySpec(mode="random20", count=100, seed=14)
        for q in gen_queries(query_net, spec):
            children = set(int(j) for j in query_net.children[q.label])
            false_count = sum(1 for f in q.positive if f not in children)
            expected = min(math.ceil(0.2 * len(q.positive)), len(q.positive) - 1)
            assert false_count == expected
            assert any(f in children for f in q.positive)  # a true one survives

    def test_chronic40_fraction(self, query_net):
        spec = QuerySpec(mode="chronic40", count=60, seed=15)
        for q in gen_queries(query_net, spec):
            children = set(int(j) for j in query_net.children[q.label])
            false_count = sum(1 for f in q.positive if f not in children)
            assert false_count == min(math.ceil(0.4 * len(q.positive)),
                                      len(q.positive) - 1)

    def test_confuse20_runs_and_labels_set(self, query_net):
        spec = QuerySpec(mode="confuse20", count=40, seed=16)
        queries = gen_queries(query_net, spec)
        assert all(q.label is not None for q in queries)

    def test_deterministic(self, query_net):
        spec = QuerySpec(mode="random20", count=30, seed=17)
        assert gen_queries(query_net, spec) == gen_queries(query_net, spec)

    def test_disjoint_findings(self, query_net):
        spec = QuerySpec(mode="random20", count=50, seed=18)
        for q in gen_queries(query_net, spec):
            assert not set(q.positive) & set(q.negative)

    def test_bad_spec(self, query_net):
        with pytest.raises(SpecError):
            gen_queries(query_net, QuerySpec(mode="nope", count=5))
        with pytest.raises(SpecError):
            gen_queries(query_net, QuerySpec(mode="clean", count=0))


class TestDegreeXiExpectation:
    def test_unit_case(self):
        assert degree_xi_expectation(1.0, 0.0, math.log(2)) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("p,c", FIGURE_SETTINGS)
    def test_strictly_decreasing(self, p, c):
        grid = np.logspace(math.log10(0.01), math.log10(50), 120)
        values = [degree_xi_expectation(float(x), p, c) for x in grid]
        diffs = np.diff(values)
        assert np.all(diffs < 0)

    def test_vanishes_at_large_xi(self):
        assert degree_xi_expectation(200.0, 99.0, 0.7) < 1e-2
        assert degree_xi_expectation(200.0, 99.0, 0.7) > 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            degree_xi_expectation(0.0, 1.0, 1.0)
        with pytest.raises(DomainError):
            degree_xi_expectation(1.0, -1.0, 1.0)
        with pytest.raises(DomainError):
            degree_xi_expectation(1.0, 1.0, 0.0)


class TestEstimateGamma:
    def test_empty_set_is_exactly_one(self, query_net):
        assert estimate_gamma(query_net, (), XiAssignment(entries={}), 100, 0) == 1.0

    def test_at_least_one(self, query_net):
        f1 = [j for j in range(query_net.n_symptoms) if len(query_net.parents[j])][:4]
        xi = XiAssignment(entries={j: 0.5 for j in f1})
        assert estimate_gamma(query_net, f1, xi, samples=2000, seed=1) >= 1.0

    def test_bad_samples(self, query_net):
        with pytest.raises(DomainError):
            estimate_gamma(query_net, (), XiAssignment(entries={}), 0, 0)


class TestPredictedLogqVariance:
    def test_point_value(self):
        assert predicted_logq_variance(2.0, 0.0, 12) == pytest.approx(1 / 144, rel=1e-12)

    def test_limits(self):
        assert predicted_logq_variance(1.0 + 1e-12, 0.0, 12) == pytest.approx(0.0, abs=1e-12)
        assert predicted_logq_variance(1e12, 0.0, 12) == pytest.approx(1 / 36, rel=1e-6)

    def test_monotonicity(self):
        gammas = [1.5, 2.0, 5.0, 50.0]
        values = [predicted_logq_variance(g, 1.0, 12) for g in gammas]
        assert values == sorted(values)
        ps = [0.0, 1.0, 10.0, 100.0]
        values = [predicted_logq_variance(2.0, p, 12) for p in ps]
        assert values == sorted(values, reverse=True)
        ms = [1, 2, 12, 100]
        values = [predicted_logq_variance(2.0, 1.0, m) for m in ms]
        assert values == sorted(values, reverse=True)

    def test_domain(self):
        with pytest.raises(DomainError):
            predicted_logq_variance(1.0, 0.0, 12)
        with pytest.raises(DomainError):
            predicted_logq_variance(2.0, -0.1, 12)
        with pytest.raises(DomainError):
            predicted_logq_variance(2.0, 0.0, 0)
