"""Compiled kernels must agree with the numpy fallback."""
import os
import subprocess
import sys

import numpy as np
import pytest

from combotpe import _backend, _kernels_py
from combotpe.metric import permutation_table

try:
    from combotpe import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def test_backend_name():
    assert _backend.BACKEND in ("cython", "python")
    if _ckernels is not None and not os.environ.get("COMBOTPE_PURE_PYTHON"):
        assert _backend.BACKEND == "cython"


def test_env_var_forces_fallback():
    out = subprocess.run(
        [sys.executable, "-c", "import combotpe; print(combotpe.BACKEND)"],
        env={**os.environ, "COMBOTPE_PURE_PYTHON": "1"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.parametrize("p", [3, 5, 6])
def test_perm_rows_agree(p):
    perms = permutation_table(p)
    idx = np.random.default_rng(p).integers(0, len(perms), size=7)
    np.testing.assert_array_equal(
        _ckernels.perm_l1_rows(perms, idx), _kernels_py.perm_l1_rows(perms, idx)
    )


@needs_ext
def test_metric_log_kernel_agree():
    rng = np.random.default_rng(0)
    dist = rng.random((6, 40)) * 3
    maxd = dist.max(axis=1)
    maxd[2] = 0.0
    a = _ckernels.metric_log_kernel(dist, maxd, 1.7)
    b = _kernels_py.metric_log_kernel(dist, maxd, 1.7)
    np.testing.assert_array_equal(a, b)
    assert np.all(a[2] == 0)


@needs_ext
def test_log_normalize_agree():
    logk = np.random.default_rng(1).normal(size=(5, 300)) * 10
    np.testing.assert_allclose(
        _ckernels.log_normalize_rows(logk), _kernels_py.log_normalize_rows(logk), rtol=0, atol=1e-12
    )


@needs_ext
def test_mixture_agree():
    rng = np.random.default_rng(2)
    comp = rng.normal(size=(11, 50)) * 5
    logw = np.log(np.full(11, 1 / 11))
    np.testing.assert_allclose(
        _ckernels.mixture_logsumexp(comp, logw), _kernels_py.mixture_logsumexp(comp, logw),
        rtol=0, atol=1e-12,
    )


@pytest.mark.parametrize(
    "desc",
    [{"family": "permutation_shift_l1", "p": 5}, {"family": "embedding_cosine", "C": 200, "K": 4}],
)
def test_study_identical_on_fallback(desc, monkeypatch):
    """Full TPE loop gives the same trials with the numpy kernels swapped in."""
    from combotpe import metric, parzen
    from combotpe.bench import make_problem
    from combotpe.sampler import TpeConfig, run_study

    assert parzen._backend is _backend and metric._backend is _backend
    default = run_study(make_problem(desc, 0).space, make_problem(desc, 0), 40, TpeConfig(seed=0))
    for name in ("perm_l1_rows", "metric_log_kernel", "log_normalize_rows", "mixture_logsumexp"):
        monkeypatch.setattr(_backend, name, getattr(_kernels_py, name))
    prob = make_problem(desc, 0)
    assert run_study(prob.space, prob, 40, TpeConfig(seed=0)) == default
