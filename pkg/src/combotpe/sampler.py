"""Ask/tell TPE loop and the random-search baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from combotpe.core import (
    Continuous,
    Observation,
    ParamVector,
    SearchSpace,
    normalize_params,
)
from combotpe.kernel import DEFAULT_B
from combotpe.parzen import build_estimator, split_observations, to_param_vectors


class PendingAskError(RuntimeError):
    """ask() was called twice without a tell() in between, or tell() without ask()."""


class NonFiniteValueError(ValueError):
    pass


class ObjectiveError(RuntimeError):
    def __init__(self, trial: int, value: float) -> None:
        super().__init__(f"objective returned non-finite value {value!r} at trial {trial}")
        self.trial = trial
        self.value = value


@dataclass(frozen=True)
class TpeConfig:
    n_startup: int = 10
    n_candidates: int = 24
    b: float = DEFAULT_B
    modification_enabled: bool = True
    metric_kernel_enabled: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_startup < 0:
            raise ValueError(f"n_startup must be >= 0, got {self.n_startup}")
        if self.n_candidates < 1:
            raise ValueError(f"n_candidates must be >= 1, got {self.n_candidates}")
        if not self.b > 1:
            raise ValueError(f"b must be > 1, got {self.b}")

    def with_seed(self, seed: int) -> TpeConfig:
        return replace(self, seed=seed)


def random_ask(space: SearchSpace, rng: np.random.Generator) -> ParamVector:
    """Uniform draw: continuous on ``[low, high]``, categorical over all indices."""
    out = []
    for dim in space.dims:
        if isinstance(dim, Continuous):
            out.append(float(rng.uniform(dim.low, dim.high)))
        else:
            out.append(int(rng.integers(dim.count)))
    return tuple(out)


class _AskTell:
    def __init__(self, space: SearchSpace, seed: int) -> None:
        self.space = space
        self.rng = np.random.default_rng(seed)
        self.history: list[Observation] = []
        self.pending: ParamVector | None = None

    def ask(self) -> ParamVector:
        if self.pending is not None:
            raise PendingAskError("ask() called again before tell()")
        self.pending = self._suggest()
        return self.pending

    def tell(self, params: Sequence, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise NonFiniteValueError(f"objective value must be finite, got {value}")
        params = normalize_params(self.space, params)
        if self.pending is not None and params != self.pending:
            raise PendingAskError(f"told {params}, but the pending suggestion is {self.pending}")
        self.history.append(Observation(params, value))
        self.pending = None

    def _suggest(self) -> ParamVector:
        raise NotImplementedError


class RandomSampler(_AskTell):
    def _suggest(self) -> ParamVector:
        return random_ask(self.space, self.rng)


class TpeSampler(_AskTell):
    """Sequential TPE over a flat search space.

    ``tell`` without a preceding ``ask`` is allowed, which lets callers seed the
    history with externally evaluated points.
    """

    def __init__(self, space: SearchSpace, config: TpeConfig | None = None) -> None:
        config = config or TpeConfig()
        super().__init__(space, config.seed)
        self.config = config

    def _suggest(self) -> ParamVector:
        if len(self.history) < self.config.n_startup:
            return random_ask(self.space, self.rng)
        split = split_observations(self.history)
        good = build_estimator(split.good, self.space, self.config)
        bad = build_estimator(split.bad, self.space, self.config)
        cands = good.sample_array(self.rng, self.config.n_candidates)
        score = good.log_pdf_batch(cands) - bad.log_pdf_batch(cands)
        best = int(np.argmax(score))
        return to_param_vectors(self.space, cands[best : best + 1])[0]


class Trial(NamedTuple):
    trial: int
    params: ParamVector
    value: float
    best_value: float


def run_study(
    space: SearchSpace,
    objective: Callable[[ParamVector], float],
    budget: int,
    config: TpeConfig | None = None,
    *,
    method: str = "tpe",
) -> list[Trial]:
    """Run ``budget`` ask/tell rounds; ``method`` is ``"tpe"`` or ``"random"``."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    config = config or TpeConfig()
    if method == "tpe":
        opt: _AskTell = TpeSampler(space, config)
    elif method == "random":
        opt = RandomSampler(space, config.seed)
    else:
        raise ValueError(f"unknown method {method!r}")

    trials = []
    best = math.inf
    for t in range(budget):
        x = opt.ask()
        value = float(objective(x))
        if not math.isfinite(value):
            raise ObjectiveError(t, value)
        opt.tell(x, value)
        best = min(best, value)
        trials.append(Trial(t, x, value, best))
    return trials
