"""Optimize black-box functions when all you can get is ranking feedback.

The estimator turns "these k points were best, in this order" into a descent
direction; the optimizer loops it with optional line search; the variance lab
quantifies when more comparisons help; the benchmark harness reproduces the
query-budget studies; and the session service plus bundled UI run the same
loop against a human ranker over HTTP.
"""

from .estimator import (
    ComparisonDag,
    GradientEstimate,
    PerturbationBatch,
    RankingOutcome,
    build_dag,
    edge_count,
    estimate_gradient,
    neighbor_pair_count,
    pairwise_estimate,
    rank_weights,
    sample_perturbations,
)
from .oracles import (
    ExactOracle,
    MeteredOracle,
    NoiseSpec,
    NoisyOracle,
    OracleRequest,
    OracleValueError,
    ValueOracle,
    argmin_select,
    deferred_rank,
    exact_rank,
    noisy_rank,
)
from .optimize import (
    InteractiveConfig,
    InteractiveState,
    IterationRecord,
    LineSearchSpec,
    OptimizerConfig,
    interactive_step,
    line_search_step,
    run,
    run_interactive,
    zo_rank_sgd_step,
    zo_sgd_step,
)
from .rng import make_rng

__version__ = "0.1.0"

__all__ = [
    "ComparisonDag",
    "GradientEstimate",
    "PerturbationBatch",
    "RankingOutcome",
    "build_dag",
    "edge_count",
    "estimate_gradient",
    "neighbor_pair_count",
    "pairwise_estimate",
    "rank_weights",
    "sample_perturbations",
    "ExactOracle",
    "MeteredOracle",
    "NoiseSpec",
    "NoisyOracle",
    "OracleRequest",
    "OracleValueError",
    "ValueOracle",
    "argmin_select",
    "deferred_rank",
    "exact_rank",
    "noisy_rank",
    "InteractiveConfig",
    "InteractiveState",
    "IterationRecord",
    "LineSearchSpec",
    "OptimizerConfig",
    "interactive_step",
    "line_search_step",
    "run",
    "run_interactive",
    "zo_rank_sgd_step",
    "zo_sgd_step",
    "make_rng",
    "__version__",
]
