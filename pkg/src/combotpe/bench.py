"""Synthetic combinatorial problems: EmbeddingCosine and PermutationShiftL1.

Instances are pure functions of ``(descriptor, seed)``; the harness stores the
descriptor only and regenerates the instance on demand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from combotpe.core import Continuous, MetricCategorical, SearchSpace
from combotpe.metric import (
    MetricHandle,
    embedding_cosine_metric,
    permutation_l1_metric,
    unrank_permutation,
)

FAMILIES = ("embedding_cosine", "permutation_shift_l1")


@dataclass(frozen=True, eq=False)
class EmbeddingCosineProblem:
    vectors: np.ndarray
    opt_index: int
    metric: MetricHandle = field(repr=False)
    space: SearchSpace = field(repr=False)

    @property
    def C(self) -> int:
        return self.vectors.shape[0]

    @property
    def K(self) -> int:
        return self.vectors.shape[1]

    def __call__(self, params) -> float:
        return embedding_cosine_eval(self, params[0])


@dataclass(frozen=True, eq=False)
class PermutationShiftProblem:
    p: int
    opt_perm_index: int
    opt_shift: float
    metric: MetricHandle = field(repr=False)
    space: SearchSpace = field(repr=False)

    @property
    def opt_perm(self) -> tuple[int, ...]:
        return unrank_permutation(self.opt_perm_index, self.p)

    def __call__(self, params) -> float:
        return permutation_shift_eval(self, params[0], params[1])


def embedding_problem_from_vectors(vectors, opt_index: int) -> EmbeddingCosineProblem:
    vectors = np.array(vectors, dtype=np.float64)
    vectors.setflags(write=False)
    if not 0 <= opt_index < vectors.shape[0]:
        raise IndexError(f"opt_index {opt_index} outside [0, {vectors.shape[0]})")
    metric = embedding_cosine_metric(vectors)
    space = SearchSpace([MetricCategorical(vectors.shape[0], metric)])
    return EmbeddingCosineProblem(vectors, int(opt_index), metric, space)


def generate_embedding_problem(C: int, K: int, rng: np.random.Generator) -> EmbeddingCosineProblem:
    """``C`` i.i.d. uniform vectors in ``[0, 1]^K`` (duplicates kept) and a uniform optimum."""
    if C < 2 or K < 1:
        raise ValueError(f"need C >= 2 and K >= 1, got C={C}, K={K}")
    vectors = rng.random((C, K))
    # redraw the (measure-zero) all-zero rows so every cosine is defined
    while True:
        zero = ~np.any(vectors > 0, axis=1)
        if not zero.any():
            break
        vectors[zero] = rng.random((int(zero.sum()), K))
    opt_index = int(rng.integers(C))
    return embedding_problem_from_vectors(vectors, opt_index)


def permutation_problem(p: int, opt_perm_index: int, opt_shift: float) -> PermutationShiftProblem:
    count = math.factorial(p)
    if not 0 <= opt_perm_index < count:
        raise IndexError(f"opt_perm_index {opt_perm_index} outside [0, {p}!)")
    if abs(opt_shift) > p:
        raise ValueError(f"opt_shift {opt_shift} outside [-{p}, {p}]")
    metric = permutation_l1_metric(p)
    space = SearchSpace([MetricCategorical(count, metric), Continuous(-p, p)])
    return PermutationShiftProblem(p, int(opt_perm_index), float(opt_shift), metric, space)


def generate_permutation_problem(p: int, rng: np.random.Generator) -> PermutationShiftProblem:
    if p < 2:
        raise ValueError(f"need p >= 2, got {p}")
    opt_perm_index = int(rng.integers(math.factorial(p)))
    opt_shift = float(rng.uniform(-p, p))
    return permutation_problem(p, opt_perm_index, opt_shift)


def embedding_cosine_eval(problem: EmbeddingCosineProblem, x: int) -> float:
    """``1 - cos(v_x, v_opt)``; identical to the attached metric by construction."""
    if not 0 <= x < problem.C:
        raise IndexError(f"category index {x} outside [0, {problem.C})")
    return problem.metric.dist(int(x), problem.opt_index)


def permutation_shift_eval(problem: PermutationShiftProblem, perm_index: int, shift: float) -> float:
    p = problem.p
    if not 0 <= perm_index < math.factorial(p):
        raise IndexError(f"permutation index {perm_index} outside [0, {p}!)")
    if abs(shift) > p:
        raise ValueError(f"shift {shift} outside [-{p}, {p}]")
    s = unrank_permutation(int(perm_index), p)
    delta = shift - problem.opt_shift
    return float(sum(abs(a - b + delta) for a, b in zip(s, problem.opt_perm)))


def problem_optimum(problem) -> float:
    if isinstance(problem, (EmbeddingCosineProblem, PermutationShiftProblem)):
        return 0.0
    raise TypeError(f"unknown problem type {type(problem).__name__}")


# -- descriptors --------------------------------------------------------------


def validate_descriptor(desc: Mapping[str, Any]) -> dict[str, Any]:
    """Return a canonical copy of a problem descriptor or raise ``ValueError``."""
    family = desc.get("family")
    seed = desc.get("problem_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError(f"problem_seed must be an integer, got {seed!r}")
    if family == "embedding_cosine":
        C, K = desc.get("C"), desc.get("K")
        if not (isinstance(C, int) and C >= 2 and isinstance(K, int) and K >= 1):
            raise ValueError(f"embedding_cosine needs integer C >= 2 and K >= 1, got {desc!r}")
        allowed = {"family", "C", "K", "problem_seed"}
        out = {"family": family, "C": C, "K": K, "problem_seed": seed}
    elif family == "permutation_shift_l1":
        p = desc.get("p")
        if not (isinstance(p, int) and 2 <= p <= 9):
            raise ValueError(f"permutation_shift_l1 needs integer p in [2, 9], got {desc!r}")
        allowed = {"family", "p", "problem_seed"}
        out = {"family": family, "p": p, "problem_seed": seed}
    else:
        raise ValueError(f"unknown problem family {family!r}; expected one of {FAMILIES}")
    extra = set(desc) - allowed
    if extra:
        raise ValueError(f"unexpected descriptor keys {sorted(extra)}")
    return out


def problem_label(desc: Mapping[str, Any]) -> str:
    if desc["family"] == "embedding_cosine":
        core = f"embedding_cosine:C={desc['C']}:K={desc['K']}"
    else:
        core = f"permutation_shift_l1:p={desc['p']}"
    return f"{core}:ps={desc.get('problem_seed', 0)}"


def make_problem(desc: Mapping[str, Any], seed: int = 0):
    """Instance for one seed index; every optimizer on that seed sees the same instance."""
    desc = validate_descriptor(desc)
    rng = np.random.default_rng([desc["problem_seed"], seed])
    if desc["family"] == "embedding_cosine":
        return generate_embedding_problem(desc["C"], desc["K"], rng)
    return generate_permutation_problem(desc["p"], rng)
