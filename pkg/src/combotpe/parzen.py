"""Good/bad split and the Parzen estimators built on each side.

An estimator is a uniform mixture of one kernel per observation plus one flat
prior basis (always the last basis). Categorical dimensions are stored as a
``(n_bases, count)`` table of log-probabilities, so both density evaluation and
sampling are table lookups.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from combotpe import _backend
from combotpe.core import (
    Categorical,
    Continuous,
    MetricCategorical,
    Observation,
    ParamVector,
    SearchSpace,
    normalize_params,
)
from combotpe.kernel import (
    CategoricalKernelParams,
    ContinuousKernelParams,
    KernelParams,
    MetricKernelParams,
    UniformKernelParams,
    categorical_bandwidth,
    compute_beta,
    exploration_scale,
    log_bandwidth_ratio,
    modified_beta,
    scott_bandwidth,
)

if TYPE_CHECKING:
    from combotpe.sampler import TpeConfig

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def gamma_count(n: int) -> int:
    """Number of observations that go into the good set."""
    return min(math.ceil(0.1 * n), 25)


@dataclass(frozen=True)
class SplitResult:
    good: list[Observation]
    bad: list[Observation]


def split_observations(history: Sequence[Observation]) -> SplitResult:
    """Take the ``gamma_count`` best observations; ties go to the earlier trial.

    Both halves keep their original trial order.
    """
    order = sorted(range(len(history)), key=lambda i: (history[i].value, i))
    k = gamma_count(len(history))
    good = sorted(order[:k])
    bad = sorted(order[k:])
    return SplitResult([history[i] for i in good], [history[i] for i in bad])


class Basis(NamedTuple):
    params: ParamVector | None  # None for the prior
    kernels: tuple[KernelParams, ...]
    weight: float


class _CategoricalTable:
    """Per-basis pmfs stored once per distinct row; ``index`` maps basis -> row."""

    __slots__ = ("rows", "index", "_cdf")

    def __init__(self, rows: np.ndarray, index: np.ndarray) -> None:
        self.rows = rows
        self.index = index
        self._cdf: np.ndarray | None = None

    @property
    def log_pmf(self) -> np.ndarray:
        return self.rows[self.index]

    @property
    def cdf(self) -> np.ndarray:
        if self._cdf is None:
            self._cdf = np.cumsum(np.exp(self.rows), axis=1)
        return self._cdf


class _ContinuousMix:
    __slots__ = ("centers", "h", "low", "high", "log_norm")

    def __init__(self, centers: np.ndarray, h: float, low: float, high: float) -> None:
        self.centers = centers
        self.h = h
        self.low = low
        self.high = high
        a = ndtr((low - centers) / h)
        b = ndtr((high - centers) / h)
        self.log_norm = math.log(h) + _LOG_SQRT_2PI + np.log(b - a)


class ParzenEstimator:
    """Immutable mixture density over a search space.

    Use :func:`build_estimator` rather than constructing this directly.
    """

    def __init__(self, space: SearchSpace, observations, components, kernels) -> None:
        self.space = space
        self.includes_prior = True
        self.n_bases = len(observations) + 1
        self.weights = np.full(self.n_bases, 1.0 / self.n_bases)
        self.log_weights = np.log(self.weights)
        self._observations = list(observations)
        self._components = components
        self._kernels = kernels

    @property
    def bases(self) -> list[Basis]:
        out = [
            Basis(o.params, tuple(k[i] for k in self._kernels), float(self.weights[i]))
            for i, o in enumerate(self._observations)
        ]
        out.append(
            Basis(None, tuple(k[-1] for k in self._kernels), float(self.weights[-1]))
        )
        return out

    def component_log_pmf(self, dim: int) -> np.ndarray:
        """Per-basis log pmf table ``(n_bases, count)`` of a categorical dimension."""
        comp = self._components[dim]
        if not isinstance(comp, _CategoricalTable):
            raise TypeError(f"dimension {dim} is not categorical")
        return comp.log_pmf

    def log_pdf_batch(self, xs: np.ndarray) -> np.ndarray:
        """Log density for each row of an ``(n, D)`` array (categories stored as floats)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        comp = np.zeros((self.n_bases, xs.shape[0]))
        for d, c in enumerate(self._components):
            col = xs[:, d]
            if isinstance(c, _CategoricalTable):
                comp += c.rows[:, col.astype(np.int64)][c.index]
            else:
                if c.centers.size:
                    z = (col[None, :] - c.centers[:, None]) / c.h
                    comp[:-1] += -0.5 * z * z - c.log_norm[:, None]
                comp[-1] -= math.log(c.high - c.low)
        return _backend.mixture_logsumexp(comp, self.log_weights)

    def log_pdf(self, x: Sequence) -> float:
        x = normalize_params(self.space, x)
        return float(self.log_pdf_batch(np.asarray([x], dtype=np.float64))[0])

    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        basis = rng.choice(self.n_bases, size=n, p=self.weights)
        is_prior = basis == self.n_bases - 1
        out = np.empty((n, len(self.space)))
        for d, c in enumerate(self._components):
            u = rng.random(n)
            if isinstance(c, _CategoricalTable):
                cdf = c.cdf[c.index[basis]]
                idx = (cdf < (u * cdf[:, -1])[:, None]).sum(axis=1)
                out[:, d] = np.minimum(idx, cdf.shape[1] - 1)
            else:
                width = c.high - c.low
                vals = c.low + u * width
                obs = ~is_prior
                if obs.any():
                    centers = c.centers[basis[obs]]
                    lo = ndtr((c.low - centers) / c.h)
                    hi = ndtr((c.high - centers) / c.h)
                    z = ndtri(lo + u[obs] * (hi - lo))
                    vals[obs] = centers + c.h * z
                out[:, d] = np.clip(vals, c.low, c.high)
        return out

    def sample(self, rng: np.random.Generator, n: int) -> list[ParamVector]:
        return to_param_vectors(self.space, self.sample_array(rng, n))


def to_param_vectors(space: SearchSpace, arr: np.ndarray) -> list[ParamVector]:
    cat = [not isinstance(d, Continuous) for d in space.dims]
    return [
        tuple(int(v) if c else float(v) for v, c in zip(row, cat)) for row in arr.tolist()
    ]


def _flat_row(count: int) -> np.ndarray:
    return np.full((1, count), -math.log(count))


def _table(unique_logk: np.ndarray, inverse: np.ndarray, count: int) -> _CategoricalTable:
    norm = _backend.log_normalize_rows(unique_logk)
    rows = np.concatenate([norm, _flat_row(count)])
    return _CategoricalTable(rows, np.append(inverse, len(norm)))


def build_estimator(
    obs: Sequence[Observation], space: SearchSpace, config: TpeConfig
) -> ParzenEstimator:
    """Mixture of one kernel per observation plus a flat prior, all weighted equally."""
    n = len(obs)
    points = np.array([o.params for o in obs], dtype=np.float64).reshape(n, len(space))
    n_numeric = sum(isinstance(d, Continuous) for d in space.dims)
    components: list = []
    kernels: list[list[KernelParams]] = []
    prior = UniformKernelParams()

    for d, dim in enumerate(space.dims):
        col = points[:, d]
        if isinstance(dim, Continuous):
            h = scott_bandwidth(col, dim.low, dim.high, n_numeric)
            components.append(_ContinuousMix(col.copy(), h, dim.low, dim.high))
            kernels.append([ContinuousKernelParams(h)] * n + [prior])
            continue

        count = dim.count
        if n == 0:
            components.append(_CategoricalTable(_flat_row(count), np.zeros(1, dtype=np.int64)))
            kernels.append([prior])
            continue

        cats = col.astype(np.int64)
        unique, inverse = np.unique(cats, return_inverse=True)
        h = categorical_bandwidth(count, n)
        penalty = log_bandwidth_ratio(count, h)

        if isinstance(dim, MetricCategorical) and config.metric_kernel_enabled:
            b = dim.b if dim.b is not None else config.b
            scale = exploration_scale(count, b) if config.modification_enabled else 1.0
            dist = dim.metric.rows(unique)
            max_dist = dist.max(axis=1)
            # -(d/beta)^2 / 2 == -(d/max_dist)^2 * log((C-1)/h) * scale
            logk = _backend.metric_log_kernel(dist, max_dist, penalty * scale)
            per_unique = []
            for m in max_dist:
                if m > 0:
                    beta = compute_beta(float(m), count, h)
                    if config.modification_enabled:
                        beta = modified_beta(beta, count, b)
                else:
                    beta = math.inf
                per_unique.append(MetricKernelParams(beta, b, float(m)))
            kernels.append([per_unique[i] for i in inverse] + [prior])
        else:
            logk = np.where(np.arange(count)[None, :] == unique[:, None], 0.0, -penalty)
            kernels.append([CategoricalKernelParams(h)] * n + [prior])
        components.append(_table(logk, inverse, count))

    return ParzenEstimator(space, obs, components, kernels)


def log_pdf(est: ParzenEstimator, x: Sequence) -> float:
    return est.log_pdf(x)


def sample(est: ParzenEstimator, rng: np.random.Generator, n: int) -> list[ParamVector]:
    return est.sample(rng, n)
