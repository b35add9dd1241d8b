import math

from combotpe.core import Continuous
from combotpe.kernel import (
    CategoricalKernelParams,
    ContinuousKernelParams,
    MetricKernelParams,
    UniformKernelParams,
    aitchison_aitken_kernel,
    categorical_normalizer,
    combinatorial_kernel,
    continuous_normalizer,
    gaussian_kernel,
)


def _dim_density(dim, kp, x, center):
    if isinstance(kp, UniformKernelParams):
        return 1.0 / (dim.high - dim.low) if isinstance(dim, Continuous) else 1.0 / dim.count
    if isinstance(kp, ContinuousKernelParams):
        return gaussian_kernel(x, center, kp.h) / continuous_normalizer(center, kp.h, dim.low, dim.high)
    if isinstance(kp, CategoricalKernelParams):
        def k(i):
            return aitchison_aitken_kernel(i, center, kp.h, dim.count)
        return k(x) / categorical_normalizer(k, dim.count)
    if isinstance(kp, MetricKernelParams):
        def k(i):
            if math.isinf(kp.beta):
                return 1.0
            return combinatorial_kernel(dim.metric.dist(i, center), kp.beta)
        return k(x) / categorical_normalizer(k, dim.count)
    raise TypeError(kp)


def reference_pdf(est, x):
    """Mixture density evaluated term by term from scalar kernels."""
    total = 0.0
    for basis in est.bases:
        term = basis.weight
        for d, (dim, kp) in enumerate(zip(est.space.dims, basis.kernels)):
            center = None if basis.params is None else basis.params[d]
            term *= _dim_density(dim, kp, x[d], center)
        total += term
    return total


def random_observations(space, n, rng):
    from combotpe.core import Observation
    from combotpe.sampler import random_ask

    return [Observation(random_ask(space, rng), float(rng.normal())) for _ in range(n)]
