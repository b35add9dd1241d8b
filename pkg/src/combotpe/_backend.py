"""Pick the compiled kernels when available, the numpy fallback otherwise.

Set ``COMBOTPE_PURE_PYTHON=1`` to force the fallback. The two log-sum-exp
reductions always use numpy: its vectorized ``exp`` beats a scalar libm loop
(see ``benchmarks/bench_backends.py``).
"""
from __future__ import annotations

import os

from combotpe import _kernels_py

if os.environ.get("COMBOTPE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from combotpe import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

perm_l1_rows = _impl.perm_l1_rows
metric_log_kernel = _impl.metric_log_kernel
log_normalize_rows = _kernels_py.log_normalize_rows
mixture_logsumexp = _kernels_py.mixture_logsumexp

__all__ = [
    "BACKEND",
    "perm_l1_rows",
    "metric_log_kernel",
    "log_normalize_rows",
    "mixture_logsumexp",
]
