import itertools
import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combotpe.metric import (
    MetricAxiomError,
    MetricError,
    MetricHandle,
    approx_max_distance,
    delta_metric,
    embedding_cosine_metric,
    hamming_metric,
    load_distance_matrix,
    metric_from_function,
    metric_from_matrix,
    permutation_l1_metric,
    permutation_table,
    rank_permutation,
    save_distance_matrix,
    unrank_permutation,
)


def brute_max(metric):
    return max(metric.dist(i, j) for i in range(metric.count) for j in range(metric.count))


# -- hamming ---------------------------------------------------------------


def test_hamming_all_positions_differ():
    assert hamming_metric(3, 2).dist(0b000, 0b111) == 3


def test_hamming_identity():
    assert hamming_metric(3, 2).dist(5, 5) == 0


def test_hamming_one_bit():
    # positional comparison of the binary strings
    a, b = format(0b101, "03b"), format(0b100, "03b")
    expected = sum(x != y for x, y in zip(a, b))
    assert expected == 1
    assert hamming_metric(3, 2).dist(0b101, 0b100) == expected


def test_hamming_ternary_matches_string_oracle():
    m = hamming_metric(3, 3)

    def digits(n):
        return [(n // 3**k) % 3 for k in range(3)]

    for i, j in itertools.product(range(27), repeat=2):
        assert m.dist(i, j) == sum(a != b for a, b in zip(digits(i), digits(j)))


def test_hamming_overflow():
    with pytest.raises(OverflowError):
        hamming_metric(40, 2)


# -- permutations ----------------------------------------------------------


def test_permutation_table_is_lexicographic():
    assert [tuple(r) for r in permutation_table(4)] == list(itertools.permutations(range(1, 5)))


@pytest.mark.parametrize("p", [1, 3, 5])
def test_rank_unrank_roundtrip(p):
    for r in range(math.factorial(p)):
        perm = unrank_permutation(r, p)
        assert rank_permutation(perm) == r
        assert perm == tuple(permutation_table(p)[r])


def test_permutation_identity_distance():
    m = permutation_l1_metric(3)
    i = rank_permutation((1, 2, 3))
    assert m.dist(i, i) == 0


def test_permutation_reverse_distance():
    m = permutation_l1_metric(3)
    a, b = rank_permutation((1, 2, 3)), rank_permutation((3, 2, 1))
    assert m.dist(a, b) == abs(1 - 3) + abs(2 - 2) + abs(3 - 1) == 4


def test_permutation_p2_max():
    perms = list(itertools.permutations([1, 2]))
    oracle = max(sum(abs(x - y) for x, y in zip(a, b)) for a in perms for b in perms)
    assert oracle == 2
    assert brute_max(permutation_l1_metric(2)) == oracle


def test_permutation_rows_match_pairwise():
    m = permutation_l1_metric(5)
    perms = list(itertools.permutations(range(1, 6)))
    for j in (0, 17, 119):
        expected = [sum(abs(x - y) for x, y in zip(perms[i], perms[j])) for i in range(120)]
        assert m.row(j).tolist() == expected


def test_permutation_too_large():
    with pytest.raises(MetricError):
        permutation_l1_metric(13)


def test_permutation_p7_never_materializes_full_matrix():
    m = permutation_l1_metric(7)
    assert m.cache_policy == "per-row"
    m.rows([0, 1, 2])
    assert m._matrix is None
    assert len(m._row_cache) == 3


# -- cosine ----------------------------------------------------------------


def test_cosine_identical_vectors():
    m = embedding_cosine_metric([[1.0, 2.0], [1.0, 2.0]])
    assert m.dist(0, 1) == 0
    assert m.dist(0, 0) == 0


def test_cosine_orthogonal():
    assert embedding_cosine_metric([[1.0, 0.0], [0.0, 1.0]]).dist(0, 1) == pytest.approx(1.0)


def test_cosine_45_degrees():
    expected = 1 - 1 / math.sqrt(2)
    m = embedding_cosine_metric([[1.0, 0.0], [1.0, 1.0]])
    assert m.dist(0, 1) == pytest.approx(expected, abs=1e-12)
    assert m.row(1)[0] == pytest.approx(expected, abs=1e-12)


def test_cosine_zero_vector_rejected():
    with pytest.raises(MetricError):
        embedding_cosine_metric([[0.0, 0.0], [1.0, 0.0]])


def test_cosine_is_not_a_metric():
    # 0, 45 and 90 degrees: 1 > 2 * (1 - 1/sqrt 2)
    m = embedding_cosine_metric([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    assert m.dist(0, 2) > m.dist(0, 1) + m.dist(1, 2)


# -- delta -----------------------------------------------------------------


def test_delta():
    m = delta_metric(5)
    assert m.dist(2, 2) == 0
    assert m.dist(0, 1) == 1
    assert brute_max(m) == 1


def test_delta_needs_two_categories():
    with pytest.raises(MetricError):
        delta_metric(1)


# -- axioms on built-ins ----------------------------------------------------


@pytest.mark.parametrize(
    "metric",
    [delta_metric(7), hamming_metric(4, 2), hamming_metric(2, 4), permutation_l1_metric(4)],
    ids=["delta", "hamming2", "hamming4", "perm4"],
)
@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_builtin_metric_axioms(metric, data):
    idx = st.integers(0, metric.count - 1)
    i, j, k = data.draw(idx), data.draw(idx), data.draw(idx)
    assert metric.dist(i, j) >= 0
    assert metric.dist(i, i) == 0
    assert metric.dist(i, j) == metric.dist(j, i)
    assert metric.dist(i, k) <= metric.dist(i, j) + metric.dist(j, k)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cosine_symmetric_nonnegative(seed):
    v = np.random.default_rng(seed).random((12, 3)) + 1e-3
    m = embedding_cosine_metric(v)
    d = m.matrix()
    assert np.all(d >= 0)
    assert np.all(np.diag(d) == 0)
    np.testing.assert_allclose(d, d.T, atol=1e-12)


# -- approx max distance ----------------------------------------------------


def test_approx_max_delta():
    assert approx_max_distance(delta_metric(4), {2}).per_basis == {2: 1.0}


def test_approx_max_permutation():
    perms = list(itertools.permutations([1, 2, 3]))
    oracle = max(sum(abs(a - b) for a, b in zip(s, (1, 2, 3))) for s in perms)
    assert oracle == 4
    est = approx_max_distance(permutation_l1_metric(3), {rank_permutation((1, 2, 3))})
    assert est[0] == oracle


def test_approx_max_hamming():
    assert approx_max_distance(hamming_metric(3, 2), {0})[0] == 3


def test_approx_max_errors():
    with pytest.raises(MetricError):
        approx_max_distance(delta_metric(3), set())
    with pytest.raises(IndexError):
        approx_max_distance(delta_metric(3), {3})


def test_approx_max_evaluation_count():
    calls = []

    def d(i, j):
        calls.append((i, j))
        return float(abs(i - j))

    m = metric_from_function(30, d, validate=False, cache_policy="none")
    approx_max_distance(m, [3, 7, 3, 11])
    assert len(calls) == 30 * 3
    assert m.evaluations == 30 * 3


def _random_l1_metric(seed, count, dim):
    pts = np.random.default_rng(seed).random((count, dim))
    return metric_from_matrix(np.abs(pts[:, None, :] - pts[None, :, :]).sum(-1)), pts


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 60), st.integers(1, 5))
def test_approx_max_factor_two_bound(seed, count, dim):
    m, _ = _random_l1_metric(seed, count, dim)
    true_max = brute_max(m)
    est = approx_max_distance(m, range(count))
    for v in est.per_basis.values():
        assert v <= true_max + 1e-12
        assert true_max <= 2 * v + 1e-12
    assert max(est.per_basis.values()) == true_max


# -- caching ---------------------------------------------------------------


def test_full_matrix_policy_limit():
    with pytest.raises(MetricError):
        MetricHandle(2000, lambda idx: np.zeros((len(idx), 2000)), cache_policy="full-matrix")


def test_row_cache_is_bounded():
    m = MetricHandle(
        2000, lambda idx: np.ones((len(idx), 2000)), cache_policy="per-row", max_cached_rows=5
    )
    m.rows(range(10))
    assert len(m._row_cache) == 5
    before = m.evaluations
    m.rows([9])
    assert m.evaluations == before


def test_concurrent_row_reads():
    m = permutation_l1_metric(6)
    expected = m.rows(range(50)).copy()
    m2 = permutation_l1_metric(6)
    results = {}

    def work(k):
        results[k] = m2.rows(range(50))

    threads = [threading.Thread(target=work, args=(k,)) for k in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for r in results.values():
        np.testing.assert_array_equal(r, expected)


# -- user metrics ------------------------------------------------------------


def test_user_function_validated():
    with pytest.raises(MetricAxiomError):
        metric_from_function(10, lambda i, j: float((i - j) ** 2))
    m = metric_from_function(10, lambda i, j: float(abs(i - j)))
    assert m.dist(2, 9) == 7


def test_matrix_file_roundtrip(tmp_path):
    m = permutation_l1_metric(3)
    path = tmp_path / "d.txt"
    save_distance_matrix(m, path)
    assert path.read_text().splitlines()[0] == "6"
    loaded = load_distance_matrix(path)
    np.testing.assert_array_equal(loaded.matrix(), m.matrix())


def test_matrix_file_format(tmp_path):
    path = tmp_path / "d.txt"
    path.write_text("3\n0 1 2\n1 0 1\n2 1 0\n")
    m = load_distance_matrix(path)
    assert m.count == 3 and m.dist(0, 2) == 2


@pytest.mark.parametrize(
    "text",
    ["3\n0 1\n1 0\n", "2\n0 1\n2 0\n", "2\n1 1\n1 0\n", "2\n0 -1\n-1 0\n", "x\n"],
    ids=["rows", "asymmetric", "diagonal", "negative", "header"],
)
def test_matrix_file_rejects(tmp_path, text):
    path = tmp_path / "d.txt"
    path.write_text(text)
    with pytest.raises(MetricError):
        load_distance_matrix(path)
