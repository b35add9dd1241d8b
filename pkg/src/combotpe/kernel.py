"""Per-dimension kernels, bandwidth rules and normalizers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.special import ndtr

DEFAULT_B = 6.0
MIN_BANDWIDTH_FRACTION = 0.01


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class ContinuousKernelParams:
    h: float


@dataclass(frozen=True)
class CategoricalKernelParams:
    h: float


@dataclass(frozen=True)
class MetricKernelParams:
    beta: float
    b: float | None
    max_dist: float


@dataclass(frozen=True)
class UniformKernelParams:
    """Flat kernel used by the prior basis."""


KernelParams = Union[
    ContinuousKernelParams, CategoricalKernelParams, MetricKernelParams, UniformKernelParams
]


def gaussian_kernel(x: float, x_prime: float, h: float) -> float:
    if not h > 0:
        raise KernelError(f"bandwidth must be positive, got {h}")
    z = (x - x_prime) / h
    return math.exp(-0.5 * z * z)


def aitchison_aitken_kernel(x: int, x_prime: int, h: float, count: int) -> float:
    if count < 2:
        raise KernelError(f"need at least 2 categories, got {count}")
    if not 0 < h <= count - 1:
        raise KernelError(f"bandwidth must lie in (0, {count - 1}], got {h}")
    if not (0 <= x < count and 0 <= x_prime < count):
        raise KernelError(f"category indices ({x}, {x_prime}) outside [0, {count})")
    return 1.0 if x == x_prime else h / (count - 1)


def categorical_bandwidth(count: int, n_obs: int) -> float:
    """``h = (C - 1) / (N + 1)``."""
    return (count - 1) / (n_obs + 1)


def log_bandwidth_ratio(count: int, h: float) -> float:
    """``log((C - 1) / h)``; the mismatch penalty of the categorical kernel in log space."""
    return math.log((count - 1) / h)


def compute_beta(max_dist: float, count: int, h: float) -> float:
    """Scale that makes the metric kernel reproduce ``h / (C - 1)`` at ``max_dist``."""
    if count < 2:
        raise KernelError(f"need at least 2 categories, got {count}")
    if not 0 < h < count - 1:
        raise KernelError(f"beta is undefined unless 0 < h < C - 1 (h={h}, C={count})")
    if not max_dist > 0:
        raise KernelError("max_dist must be positive; all categories are at distance 0")
    return max_dist / math.sqrt(2.0 * log_bandwidth_ratio(count, h))


def exploration_scale(count: int, b: float) -> float:
    """``log_b(C)``: the squared shrink factor applied to beta."""
    if not b > 1:
        raise KernelError(f"exploration base must be > 1, got {b}")
    if count < 2:
        raise KernelError(f"need at least 2 categories, got {count}")
    return math.log(count) / math.log(b)


def modified_beta(beta: float, count: int, b: float) -> float:
    if not beta > 0:
        raise KernelError(f"beta must be positive, got {beta}")
    return beta / math.sqrt(exploration_scale(count, b))


def combinatorial_kernel(dist: float, beta: float) -> float:
    if not beta > 0:
        raise KernelError(f"beta must be positive, got {beta}")
    if dist < 0:
        raise KernelError(f"distance must be nonnegative, got {dist}")
    z = dist / beta
    return math.exp(-0.5 * z * z)


def categorical_normalizer(kernel_row: Callable[[int], float], count: int) -> float:
    """Discrete normalizer: the kernel summed over all categories."""
    if count < 2:
        raise KernelError(f"need at least 2 categories, got {count}")
    return math.fsum(kernel_row(i) for i in range(count))


def continuous_normalizer(center: float, h: float, low: float, high: float) -> float:
    """Mass of the Gaussian kernel at ``center`` on ``[low, high]``."""
    if not h > 0:
        raise KernelError(f"bandwidth must be positive, got {h}")
    if not low < high:
        raise KernelError(f"need low < high, got [{low}, {high}]")
    a, b = (low - center) / h, (high - center) / h
    # evaluate on the side where both CDF values are small to avoid cancellation
    if a > 0:
        mass = ndtr(-a) - ndtr(-b)
    else:
        mass = ndtr(b) - ndtr(a)
    return h * math.sqrt(2 * math.pi) * float(mass)


def scott_bandwidth(values: np.ndarray, low: float, high: float, n_numeric_dims: int) -> float:
    """Scott's rule on the min-max normalized coordinate, clipped and mapped back.

    Falls back to the full range when fewer than two values are observed.
    """
    width = high - low
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return width
    sigma = float(np.std((values - low) / width, ddof=1))
    h = sigma * values.size ** (-1.0 / (n_numeric_dims + 4))
    return float(np.clip(h, MIN_BANDWIDTH_FRACTION, 1.0)) * width
