"""Distance metrics over category indices.

A :class:`MetricHandle` exposes distances as whole rows (one basis against all
``count`` categories) because that is what the Parzen estimator consumes.
Rows are memoized according to the handle's cache policy.
"""
from __future__ import annotations

import itertools
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from combotpe import _backend

FULL_MATRIX_LIMIT = 1024
MAX_CATEGORIES = 2**31 - 1
MAX_PERMUTATION_SIZE = 12
DEFAULT_ROW_CACHE = 1024
_COSINE_ZERO = 1e-15

CACHE_POLICIES = ("full-matrix", "per-row", "none")


class MetricError(ValueError):
    pass


class MetricAxiomError(MetricError):
    """A user-supplied metric failed a sampled axiom check."""


class MetricHandle:
    """Distance function over ``count`` categories with row-level memoization.

    Args:
        count: number of categories.
        rows_fn: maps an int64 array of basis indices to a ``(len(idx), count)``
            float array of distances.
        pair_fn: optional cheap ``dist(i, j)``; defaults to a row lookup.
        cache_policy: ``"full-matrix"`` (only allowed for ``count <= 1024``),
            ``"per-row"`` or ``"none"``. Defaults to full-matrix when small.
    """

    def __init__(
        self,
        count: int,
        rows_fn: Callable[[np.ndarray], np.ndarray],
        *,
        pair_fn: Callable[[int, int], float] | None = None,
        cache_policy: str | None = None,
        max_cached_rows: int = DEFAULT_ROW_CACHE,
        name: str = "custom",
    ) -> None:
        if count < 1 or count > MAX_CATEGORIES:
            raise MetricError(f"category count {count} out of range")
        if cache_policy is None:
            cache_policy = "full-matrix" if count <= FULL_MATRIX_LIMIT else "per-row"
        if cache_policy not in CACHE_POLICIES:
            raise MetricError(f"unknown cache policy {cache_policy!r}")
        if cache_policy == "full-matrix" and count > FULL_MATRIX_LIMIT:
            raise MetricError(
                f"full-matrix caching is limited to {FULL_MATRIX_LIMIT} categories, got {count}"
            )
        self.count = int(count)
        self.cache_policy = cache_policy
        self.name = name
        self.evaluations = 0
        self._rows_fn = rows_fn
        self._pair_fn = pair_fn
        self._max_cached_rows = max_cached_rows
        self._matrix: np.ndarray | None = None
        self._row_cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"MetricHandle(name={self.name!r}, count={self.count}, cache_policy={self.cache_policy!r})"

    def _check_index(self, i: int) -> None:
        if not (0 <= i < self.count):
            raise IndexError(f"category index {i} outside [0, {self.count})")

    def dist(self, i: int, j: int) -> float:
        self._check_index(i)
        self._check_index(j)
        if self._matrix is not None:
            return float(self._matrix[j, i])
        if self._pair_fn is not None:
            self.evaluations += 1
            return float(self._pair_fn(int(i), int(j)))
        return float(self.row(j)[i])

    def __call__(self, i: int, j: int) -> float:
        return self.dist(i, j)

    def _compute(self, idx: np.ndarray) -> np.ndarray:
        out = np.asarray(self._rows_fn(idx), dtype=np.float64)
        self.evaluations += out.size
        return out

    def row(self, j: int) -> np.ndarray:
        """Distances from every category to ``j`` (read-only array of length ``count``)."""
        return self.rows([j])[0]

    def rows(self, idx: Iterable[int]) -> np.ndarray:
        idx = np.asarray(list(idx), dtype=np.int64).reshape(-1)
        for j in idx:
            self._check_index(int(j))
        if self.cache_policy == "none":
            return self._compute(idx)
        if self.cache_policy == "full-matrix":
            with self._lock:
                if self._matrix is None:
                    m = self._compute(np.arange(self.count, dtype=np.int64))
                    m.setflags(write=False)
                    self._matrix = m
            return self._matrix[idx]
        with self._lock:
            missing = [int(j) for j in dict.fromkeys(idx.tolist()) if j not in self._row_cache]
            if missing:
                fresh = self._compute(np.asarray(missing, dtype=np.int64))
                for j, r in zip(missing, fresh):
                    r.setflags(write=False)
                    self._row_cache[j] = r
            out = np.empty((idx.size, self.count), dtype=np.float64)
            for k, j in enumerate(idx.tolist()):
                out[k] = self._row_cache[j]
                self._row_cache.move_to_end(j)
            while len(self._row_cache) > self._max_cached_rows:
                self._row_cache.popitem(last=False)
        return out

    def matrix(self) -> np.ndarray:
        """The full ``count x count`` distance matrix (computed, not cached, for large counts)."""
        return self.rows(range(self.count))


@dataclass(frozen=True)
class MaxDistanceEstimate:
    per_basis: dict[int, float]

    def __getitem__(self, basis: int) -> float:
        return self.per_basis[basis]


def approx_max_distance(metric: MetricHandle, bases: Iterable[int]) -> MaxDistanceEstimate:
    """Farthest-category distance for each basis: ``max_x dist(x, basis)``.

    Costs ``count`` evaluations per unique basis instead of ``count**2`` for the
    exact diameter, and is within a factor 2 of it for true metrics.
    """
    unique = sorted(set(int(b) for b in bases))
    if not unique:
        raise MetricError("bases must be non-empty")
    for b in unique:
        metric._check_index(b)
    maxima = metric.rows(unique).max(axis=1)
    return MaxDistanceEstimate({b: float(m) for b, m in zip(unique, maxima)})


# -- built-in metrics -------------------------------------------------------


def delta_metric(count: int) -> MetricHandle:
    """``0`` on the diagonal, ``1`` everywhere else."""
    if count < 2:
        raise MetricError(f"delta metric needs count >= 2, got {count}")
    cols = np.arange(count)

    def rows(idx: np.ndarray) -> np.ndarray:
        return (cols[None, :] != idx[:, None]).astype(np.float64)

    return MetricHandle(
        count, rows, pair_fn=lambda i, j: float(i != j), cache_policy="none", name="delta"
    )


def hamming_metric(length: int, arity: int = 2) -> MetricHandle:
    """Hamming distance between indices decoded as little-endian base-``arity`` strings."""
    if length < 1 or arity < 2:
        raise MetricError(f"need length >= 1 and arity >= 2, got {length}, {arity}")
    if arity**length > MAX_CATEGORIES:
        raise OverflowError(f"{arity}**{length} categories exceed the supported maximum")
    count = arity**length
    digits = np.empty((count, length), dtype=np.int16)
    n = np.arange(count)
    for k in range(length):
        digits[:, k] = n % arity
        n = n // arity

    def rows(idx: np.ndarray) -> np.ndarray:
        return np.stack([(digits != digits[j]).sum(axis=1) for j in idx]).astype(np.float64)

    def pair(i: int, j: int) -> float:
        return float(np.count_nonzero(digits[i] != digits[j]))

    return MetricHandle(count, rows, pair_fn=pair, name=f"hamming(K={length},arity={arity})")


@lru_cache(maxsize=None)
def permutation_table(p: int) -> np.ndarray:
    """All permutations of ``1..p`` in lexicographic order, shape ``(p!, p)``, int8."""
    if not 1 <= p <= MAX_PERMUTATION_SIZE:
        raise MetricError(f"permutation size must be in [1, {MAX_PERMUTATION_SIZE}], got {p}")
    table = np.array(list(itertools.permutations(range(1, p + 1))), dtype=np.int8)
    table.setflags(write=False)
    return table


def unrank_permutation(rank: int, p: int) -> tuple[int, ...]:
    """Lexicographic rank -> permutation of ``1..p``."""
    if not 0 <= rank < math.factorial(p):
        raise IndexError(f"rank {rank} outside [0, {p}!)")
    items = list(range(1, p + 1))
    out = []
    for k in range(p, 0, -1):
        f = math.factorial(k - 1)
        q, rank = divmod(rank, f)
        out.append(items.pop(q))
    return tuple(out)


def rank_permutation(perm: Sequence[int]) -> int:
    """Inverse of :func:`unrank_permutation` (Lehmer code)."""
    p = len(perm)
    if sorted(perm) != list(range(1, p + 1)):
        raise ValueError(f"{perm!r} is not a permutation of 1..{p}")
    rank = 0
    for i, v in enumerate(perm):
        smaller = sum(1 for w in perm[i + 1 :] if w < v)
        rank += smaller * math.factorial(p - 1 - i)
    return rank


def permutation_l1_metric(p: int) -> MetricHandle:
    """L1 distance between permutations of ``1..p``, indexed by lexicographic rank."""
    if not 1 <= p <= MAX_PERMUTATION_SIZE:
        raise MetricError(f"permutation size must be in [1, {MAX_PERMUTATION_SIZE}], got {p}")
    count = math.factorial(p)

    def rows(idx: np.ndarray) -> np.ndarray:
        return _backend.perm_l1_rows(permutation_table(p), idx)

    def pair(i: int, j: int) -> float:
        a, b = unrank_permutation(i, p), unrank_permutation(j, p)
        return float(sum(abs(x - y) for x, y in zip(a, b)))

    return MetricHandle(count, rows, pair_fn=pair, name=f"permutation_l1(p={p})")


def embedding_cosine_metric(vectors) -> MetricHandle:
    """``1 - cos(v_i, v_j)``. Not a true metric: the triangle inequality can fail."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 1:
        raise MetricError("vectors must be a non-empty 2-D array")
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms <= 0):
        raise MetricError("every vector needs a strictly positive norm")
    unit = v / norms[:, None]
    unit.setflags(write=False)

    def rows(idx: np.ndarray) -> np.ndarray:
        out = 1.0 - unit[idx] @ unit.T
        # rounding leaves ~1e-16 for parallel vectors
        out[out < _COSINE_ZERO] = 0.0
        out[np.arange(idx.size), idx] = 0.0
        return out

    def pair(i: int, j: int) -> float:
        if i == j:
            return 0.0
        d = 1.0 - float(unit[i] @ unit[j])
        return d if d >= _COSINE_ZERO else 0.0

    return MetricHandle(v.shape[0], rows, pair_fn=pair, name=f"embedding_cosine(K={v.shape[1]})")


# -- user-supplied metrics --------------------------------------------------


def check_metric_axioms(
    metric: MetricHandle, n_checks: int = 1000, seed: int = 0, rtol: float = 1e-9
) -> None:
    """Spot-check nonnegativity, zero diagonal, symmetry and the triangle inequality."""
    rng = np.random.default_rng(seed)
    trip = rng.integers(0, metric.count, size=(n_checks, 3))
    for i, j, k in trip.tolist():
        dij, djk, dik = metric.dist(i, j), metric.dist(j, k), metric.dist(i, k)
        scale = max(1.0, abs(dij), abs(djk), abs(dik))
        if metric.dist(i, i) != 0:
            raise MetricAxiomError(f"dist({i}, {i}) = {metric.dist(i, i)} != 0")
        if min(dij, djk, dik) < 0:
            raise MetricAxiomError(f"negative distance among ({i}, {j}, {k})")
        if abs(dij - metric.dist(j, i)) > rtol * scale:
            raise MetricAxiomError(f"dist({i}, {j}) != dist({j}, {i})")
        if dik > dij + djk + rtol * scale:
            raise MetricAxiomError(f"triangle inequality fails on ({i}, {j}, {k})")


def metric_from_function(
    count: int,
    fn: Callable[[int, int], float],
    *,
    validate: bool = True,
    n_checks: int = 1000,
    seed: int = 0,
    cache_policy: str | None = None,
    name: str = "custom",
) -> MetricHandle:
    def rows(idx: np.ndarray) -> np.ndarray:
        return np.array([[fn(i, int(j)) for i in range(count)] for j in idx], dtype=np.float64)

    handle = MetricHandle(count, rows, pair_fn=fn, cache_policy=cache_policy, name=name)
    if validate:
        check_metric_axioms(handle, n_checks=n_checks, seed=seed)
        handle.evaluations = 0
    return handle


def metric_from_matrix(matrix, *, validate: bool = True, atol: float = 1e-12) -> MetricHandle:
    m = np.array(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise MetricError(f"distance matrix must be square, got shape {m.shape}")
    if validate:
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise MetricError("distances must be finite and nonnegative")
        if np.any(np.diag(m) != 0):
            raise MetricError("distance matrix diagonal must be zero")
        if not np.allclose(m, m.T, rtol=0, atol=atol):
            raise MetricError("distance matrix must be symmetric")
    m.setflags(write=False)
    # the matrix is already resident; no further caching needed
    return MetricHandle(
        m.shape[0],
        lambda idx: m[idx],
        pair_fn=lambda i, j: float(m[i, j]),
        cache_policy="none",
        name="matrix",
    )


def load_distance_matrix(path: str | Path) -> MetricHandle:
    """Read the plain-text format: first line ``C``, then ``C`` rows of ``C`` reals."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise MetricError(f"{path}: empty distance-matrix file")
    try:
        count = int(lines[0].strip())
    except ValueError as exc:
        raise MetricError(f"{path}: first line must be the category count") from exc
    if len(lines) - 1 != count:
        raise MetricError(f"{path}: expected {count} rows, found {len(lines) - 1}")
    rows = []
    for n, ln in enumerate(lines[1:], start=2):
        vals = ln.split()
        if len(vals) != count:
            raise MetricError(f"{path}:{n}: expected {count} values, found {len(vals)}")
        rows.append([float(v) for v in vals])
    return metric_from_matrix(rows)


def save_distance_matrix(metric: MetricHandle, path: str | Path) -> None:
    m = metric.matrix()
    with open(path, "w") as fh:
        fh.write(f"{metric.count}\n")
        for row in m:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
