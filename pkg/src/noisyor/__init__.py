"""Exact and variational inference for noisy-or bipartite Bayesian networks."""

from .errors import (
    BadN,
    DomainError,
    EvidenceImpossible,
    LengthMismatch,
    MissingXi,
    NoConvergence,
    NoEligibleLabel,
    NoisyOrError,
    NoParents,
    ParseError,
    SpecError,
    TooManyDiseases,
    TooManyPositiveFindings,
    UnknownDisease,
    UnknownSymptom,
    ValidationError,
)
from .estimator import NoisyOrDiagnoser
from .exact import (
    Evidence,
    brute_force_evidence,
    brute_force_posteriors,
    quickscore_evidence,
    quickscore_infer,
    quickscore_posteriors,
)
from .hybrid import (
    HybridConfig,
    InferenceResult,
    Partition,
    infer,
    infer_jh,
    infer_jj99,
    infer_quickscore,
    infer_vfh,
    order_fdo,
    order_gdo,
    partition,
    rank_diseases,
)
from .network import NoisyOrNetwork, Query, load_network, load_queries, save_network, save_queries
from .synth import (
    NetworkSpec,
    QuerySpec,
    ScrambleSpec,
    degree_xi_expectation,
    estimate_gamma,
    gen_network,
    gen_network_file,
    gen_queries,
    predicted_logq_variance,
    scramble_priors,
)
from .variational import (
    XiAssignment,
    XiCache,
    XiSolveProblem,
    bound_gradient,
    conj_dual,
    conj_f,
    cvx_solve_xi,
    ppf_xi,
    variational_evidence,
    variational_posteriors,
)

__version__ = "0.1.0"
