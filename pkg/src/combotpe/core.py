"""Search-space primitives shared by every other module.

Categorical values are always 0-based dense indices. Objectives are minimized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence, Union

if TYPE_CHECKING:
    from combotpe.metric import MetricHandle


class SearchSpaceError(ValueError):
    """Raised for malformed search spaces or dimensions."""


class ParamValidationError(ValueError):
    """Base class for parameter vectors that do not fit a search space."""


class DimensionMismatchError(ParamValidationError):
    pass


class ContinuousOutOfRangeError(ParamValidationError):
    pass


class CategoryOutOfRangeError(ParamValidationError):
    pass


class EmptyHistoryError(ValueError):
    pass


@dataclass(frozen=True)
class Continuous:
    low: float
    high: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise SearchSpaceError(f"bounds must be finite, got [{self.low}, {self.high}]")
        if not self.low < self.high:
            raise SearchSpaceError(f"need low < high, got [{self.low}, {self.high}]")

    @property
    def width(self) -> float:
        return self.high - self.low


@dataclass(frozen=True)
class Categorical:
    count: int

    def __post_init__(self) -> None:
        if int(self.count) != self.count or self.count < 2:
            raise SearchSpaceError(f"categorical count must be an integer >= 2, got {self.count}")


@dataclass(frozen=True, eq=False)
class MetricCategorical:
    """A categorical dimension whose categories carry a distance metric.

    ``b`` overrides the study-wide exploration base for this dimension only.
    """

    count: int
    metric: MetricHandle
    b: float | None = None

    def __post_init__(self) -> None:
        if int(self.count) != self.count or self.count < 2:
            raise SearchSpaceError(f"categorical count must be an integer >= 2, got {self.count}")
        if self.metric.count != self.count:
            raise SearchSpaceError(
                f"metric covers {self.metric.count} categories but the dimension has {self.count}"
            )
        if self.b is not None and not self.b > 1:
            raise SearchSpaceError(f"exploration base b must be > 1, got {self.b}")


Dimension = Union[Continuous, Categorical, MetricCategorical]
ParamVector = tuple  # one entry per dimension: float or int


def is_categorical(dim: Dimension) -> bool:
    return isinstance(dim, (Categorical, MetricCategorical))


@dataclass(frozen=True)
class SearchSpace:
    dims: tuple[Dimension, ...]

    def __init__(self, dims: Sequence[Dimension]) -> None:
        dims = tuple(dims)
        if not dims:
            raise SearchSpaceError("a search space needs at least one dimension")
        for d in dims:
            if not isinstance(d, (Continuous, Categorical, MetricCategorical)):
                raise SearchSpaceError(f"unsupported dimension type {type(d).__name__}")
        object.__setattr__(self, "dims", dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, i: int) -> Dimension:
        return self.dims[i]

    @property
    def n_combinations(self) -> float:
        """Number of discrete combinations; ``inf`` if any dimension is continuous."""
        total = 1
        for d in self.dims:
            if isinstance(d, Continuous):
                return math.inf
            total *= d.count
        return total


@dataclass(frozen=True)
class Observation:
    params: ParamVector
    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"observation value must be finite, got {self.value}")


def validate(space: SearchSpace, params: Sequence) -> None:
    """Raise a :class:`ParamValidationError` subclass if ``params`` does not fit ``space``."""
    if len(params) != len(space.dims):
        raise DimensionMismatchError(
            f"expected {len(space.dims)} values, got {len(params)}"
        )
    for i, (dim, v) in enumerate(zip(space.dims, params)):
        if isinstance(dim, Continuous):
            if not (dim.low <= v <= dim.high):
                raise ContinuousOutOfRangeError(
                    f"dimension {i}: {v} outside [{dim.low}, {dim.high}]"
                )
        else:
            if int(v) != v or not (0 <= v < dim.count):
                raise CategoryOutOfRangeError(
                    f"dimension {i}: category index {v} outside [0, {dim.count})"
                )


def normalize_params(space: SearchSpace, params: Sequence) -> ParamVector:
    """Validate and coerce to the canonical tuple (ints for categories, floats otherwise)."""
    validate(space, params)
    return tuple(
        float(v) if isinstance(d, Continuous) else int(v) for d, v in zip(space.dims, params)
    )


def best_observation(history: Sequence[Observation]) -> Observation:
    """Observation with the smallest value; the earliest one wins ties."""
    if not history:
        raise EmptyHistoryError("history is empty")
    best = history[0]
    for obs in history[1:]:
        if obs.value < best.value:
            best = obs
    return best
