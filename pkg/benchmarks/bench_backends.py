"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_backends.py [--repeat N]

Kernel timings call both implementations directly. Study timings run a full
metric-tpe study in a subprocess per backend, since the backend is chosen at import.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from combotpe import _backend, _kernels_py
from combotpe.metric import permutation_table

try:
    from combotpe import _ckernels
except ImportError:
    _ckernels = None

STUDY = """
import time
from combotpe import BACKEND
from combotpe.bench import make_problem
from combotpe.sampler import TpeConfig, run_study
prob = make_problem({desc!r}, 0)
t0 = time.perf_counter()
run_study(prob.space, prob, 100, TpeConfig(seed=0))
print(BACKEND, time.perf_counter() - t0)
"""

STUDIES = [
    {"family": "permutation_shift_l1", "p": 7},
    {"family": "embedding_cosine", "C": 1000, "K": 16},
]


def kernel_cases(rng):
    perms = permutation_table(7)
    idx = rng.integers(0, len(perms), size=10)
    dist = rng.random((10, 5040)) * 20
    maxd = dist.max(axis=1)
    logk = rng.normal(size=(10, 5040))
    comp = rng.normal(size=(11, 24 * 50))
    logw = np.full(11, -np.log(11))
    return [
        ("perm_l1_rows p=7, 10 rows", "perm_l1_rows", (perms, idx)),
        ("metric_log_kernel 10x5040", "metric_log_kernel", (dist, maxd, 2.5)),
        ("log_normalize_rows 10x5040", "log_normalize_rows", (logk,)),
        ("mixture_logsumexp 11x1200", "mixture_logsumexp", (comp, logw)),
    ]


def best_time(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=20, repeat=repeat)) / 20


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'cython':>10s} {'numpy':>10s} {'speedup':>8s}")
    for label, name, fargs in kernel_cases(rng):
        c = best_time(getattr(_ckernels, name), fargs, args.repeat)
        p = best_time(getattr(_kernels_py, name), fargs, args.repeat)
        used = "cython" if getattr(_backend, name) is getattr(_ckernels, name) else "numpy"
        print(f"{label:32s} {c * 1e6:8.1f}us {p * 1e6:8.1f}us {p / c:7.2f}x  runtime: {used}")

    print(f"\n{'study (100 trials, metric-tpe)':32s} {'cython':>10s} {'numpy':>10s} {'speedup':>8s}")
    for desc in STUDIES:
        times = {}
        for pure in ("0", "1"):
            env = {**os.environ, "COMBOTPE_PURE_PYTHON": pure}
            out = subprocess.run(
                [sys.executable, "-c", STUDY.format(desc=desc)],
                env=env, capture_output=True, text=True, check=True,
            ).stdout.split()
            times[out[0]] = float(out[1])
        label = ":".join(f"{k}={v}" for k, v in desc.items() if k != "family")
        label = f"{desc['family']} {label}"
        c, p = times["cython"], times["python"]
        print(f"{label:32s} {c:9.2f}s {p:9.2f}s {p / c:7.2f}x")


if __name__ == "__main__":
    main()
