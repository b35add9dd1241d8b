import math

import numpy as np
import pytest

from combotpe.core import (
    Categorical,
    CategoryOutOfRangeError,
    Continuous,
    MetricCategorical,
    SearchSpace,
    validate,
)
from combotpe.metric import delta_metric, hamming_metric, permutation_l1_metric
from combotpe.sampler import (
    NonFiniteValueError,
    ObjectiveError,
    PendingAskError,
    RandomSampler,
    TpeConfig,
    TpeSampler,
    random_ask,
    run_study,
)


def test_defaults():
    cfg = TpeConfig()
    assert (cfg.n_startup, cfg.n_candidates, cfg.b) == (10, 24, 6.0)
    assert cfg.modification_enabled and cfg.metric_kernel_enabled


@pytest.mark.parametrize("kw", [{"b": 1.0}, {"n_candidates": 0}, {"n_startup": -1}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        TpeConfig(**kw)


def test_startup_is_random():
    space = SearchSpace([Categorical(5), Continuous(0, 1)])
    s = TpeSampler(space, TpeConfig(seed=3))
    x = s.ask()
    assert x == random_ask(space, np.random.default_rng(3))


def test_ask_is_deterministic():
    space = SearchSpace([MetricCategorical(24, permutation_l1_metric(4)), Continuous(-4, 4)])
    rng = np.random.default_rng(0)
    hist = [(random_ask(space, rng), float(rng.normal())) for _ in range(15)]

    def suggest():
        s = TpeSampler(space, TpeConfig(seed=11))
        for x, v in hist:
            s.tell(x, v)
        return s.ask()

    assert suggest() == suggest()


def test_ask_concentrates_on_good_category():
    space = SearchSpace([Categorical(2)])
    picks = []
    for seed in range(100):
        s = TpeSampler(space, TpeConfig(seed=seed))
        for i in range(20):
            s.tell((i % 2,), float(i % 2))
        picks.append(s.ask()[0])
    assert picks.count(0) / len(picks) > 0.9


def test_tell_increments_history():
    s = TpeSampler(SearchSpace([Categorical(3)]))
    x = s.ask()
    s.tell(x, 1.0)
    assert len(s.history) == 1 and s.pending is None


def test_tell_nan_rejected():
    s = TpeSampler(SearchSpace([Categorical(3)]))
    x = s.ask()
    with pytest.raises(NonFiniteValueError):
        s.tell(x, math.nan)
    assert s.history == [] and s.pending == x


def test_tell_out_of_range_rejected():
    s = TpeSampler(SearchSpace([Categorical(3)]))
    s.ask()
    with pytest.raises(CategoryOutOfRangeError):
        s.tell((3,), 1.0)
    assert s.history == []


def test_double_ask_rejected():
    s = TpeSampler(SearchSpace([Categorical(3)]))
    s.ask()
    with pytest.raises(PendingAskError):
        s.ask()


def test_tell_must_match_pending():
    s = TpeSampler(SearchSpace([Categorical(3)]), TpeConfig(seed=0))
    x = s.ask()
    with pytest.raises(PendingAskError):
        s.tell(((x[0] + 1) % 3,), 0.0)


def test_random_ask_categorical_uniform():
    space = SearchSpace([Categorical(4)])
    rng = np.random.default_rng(0)
    n = 100_000
    counts = np.bincount([random_ask(space, rng)[0] for _ in range(n)], minlength=4)
    sigma = math.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(counts - n / 4) < 3 * sigma)


def test_random_ask_continuous_mean():
    space = SearchSpace([Continuous(0, 1)])
    rng = np.random.default_rng(1)
    n = 100_000
    xs = np.array([random_ask(space, rng)[0] for _ in range(n)])
    assert abs(xs.mean() - 0.5) < 3 * math.sqrt(1 / 12 / n)
    assert xs.min() >= 0 and xs.max() <= 1


def test_random_ask_reproducible():
    space = SearchSpace([Categorical(4), Continuous(-1, 1)])
    assert random_ask(space, np.random.default_rng(5)) == random_ask(space, np.random.default_rng(5))


def _space():
    return SearchSpace([MetricCategorical(24, permutation_l1_metric(4)), Continuous(-4, 4)])


def _objective(x):
    return abs(x[0] - 7) + abs(x[1] - 1.5)


def test_run_study_single_trial():
    tr = run_study(_space(), _objective, 1)
    assert len(tr) == 1 and tr[0].best_value == tr[0].value


def test_run_study_best_nonincreasing():
    tr = run_study(_space(), _objective, 40, TpeConfig(seed=2))
    bests = [t.best_value for t in tr]
    assert bests == sorted(bests, reverse=True)
    assert bests == list(np.minimum.accumulate([t.value for t in tr]))
    for t in tr:
        validate(_space(), t.params)


def test_run_study_constant_objective():
    tr = run_study(_space(), lambda x: 3.0, 30)
    assert all(t.value == 3.0 for t in tr)


def test_run_study_nonfinite_objective():
    calls = []

    def f(x):
        calls.append(x)
        return math.inf if len(calls) == 4 else 1.0

    with pytest.raises(ObjectiveError, match="trial 3"):
        run_study(_space(), f, 10)


def test_run_study_is_deterministic():
    a = run_study(_space(), _objective, 30, TpeConfig(seed=4))
    b = run_study(_space(), _objective, 30, TpeConfig(seed=4))
    assert a == b


def test_random_method():
    tr = run_study(_space(), _objective, 20, TpeConfig(seed=1), method="random")
    rs = RandomSampler(_space(), 1)
    expected = []
    for _ in range(20):
        x = rs.ask()
        rs.tell(x, _objective(x))
        expected.append(x)
    assert [t.params for t in tr] == expected


def _suggestions(space, objective, n, cfg):
    return [t.params for t in run_study(space, objective, n, cfg)]


def test_argmax_invariance_to_shift():
    space = _space()
    a = _suggestions(space, _objective, 35, TpeConfig(seed=6))
    b = _suggestions(space, lambda x: _objective(x) + 123.0, 35, TpeConfig(seed=6))
    assert a == b


def test_metric_disabled_equals_plain_categorical():
    table = np.random.default_rng(0).random(8)
    f = lambda x: float(table[x[0]])  # noqa: E731
    metric_space = SearchSpace([MetricCategorical(8, hamming_metric(3))])
    plain_space = SearchSpace([Categorical(8)])
    cfg = TpeConfig(seed=1, metric_kernel_enabled=False)
    assert _suggestions(metric_space, f, 40, cfg) == _suggestions(plain_space, f, 40, cfg)


def test_delta_metric_equals_plain_categorical():
    table = np.random.default_rng(1).random(12)
    f = lambda x: float(table[x[0]] + (x[1] - 0.3) ** 2)  # noqa: E731
    metric_space = SearchSpace([MetricCategorical(12, delta_metric(12)), Continuous(0, 1)])
    plain_space = SearchSpace([Categorical(12), Continuous(0, 1)])
    cfg = TpeConfig(seed=2, modification_enabled=False)
    assert _suggestions(metric_space, f, 40, cfg) == _suggestions(plain_space, f, 40, cfg)


def test_concurrent_studies_are_independent():
    from concurrent.futures import ThreadPoolExecutor

    shared = _space()

    def job(seed):
        return _suggestions(shared, _objective, 25, TpeConfig(seed=seed))

    serial = [job(s) for s in range(4)]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(job, range(4)))
    assert threaded == serial
