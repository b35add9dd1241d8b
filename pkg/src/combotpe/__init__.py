"""TPE with distance-aware kernels for combinatorial search spaces."""
from combotpe._backend import BACKEND
from combotpe.core import (
    Categorical,
    Continuous,
    MetricCategorical,
    Observation,
    SearchSpace,
    best_observation,
    validate,
)
from combotpe.metric import (
    MetricHandle,
    approx_max_distance,
    delta_metric,
    embedding_cosine_metric,
    hamming_metric,
    load_distance_matrix,
    permutation_l1_metric,
)
from combotpe.parzen import build_estimator, gamma_count, split_observations
from combotpe.sampler import RandomSampler, TpeConfig, TpeSampler, random_ask, run_study

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Categorical",
    "Continuous",
    "MetricCategorical",
    "MetricHandle",
    "Observation",
    "RandomSampler",
    "SearchSpace",
    "TpeConfig",
    "TpeSampler",
    "approx_max_distance",
    "best_observation",
    "build_estimator",
    "delta_metric",
    "embedding_cosine_metric",
    "gamma_count",
    "hamming_metric",
    "load_distance_matrix",
    "permutation_l1_metric",
    "random_ask",
    "run_study",
    "split_observations",
    "validate",
]
