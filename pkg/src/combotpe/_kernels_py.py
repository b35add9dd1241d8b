"""Pure numpy implementations of the hot kernels.

Every function here has a drop-in twin in ``_ckernels.pyx``; both must agree to
within floating-point reassociation error.
"""
from __future__ import annotations

import numpy as np


def perm_l1_rows(perms: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """L1 distances from ``perms[idx[r]]`` to every row of ``perms``. Shape (len(idx), C)."""
    perms = np.asarray(perms, dtype=np.int8)
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty((idx.size, perms.shape[0]), dtype=np.float64)
    wide = perms.astype(np.int16)
    for r, j in enumerate(idx):
        out[r] = np.abs(wide - wide[j]).sum(axis=1)
    return out


def metric_log_kernel(dist: np.ndarray, max_dist: np.ndarray, coef: float) -> np.ndarray:
    """Unnormalized log kernel ``-coef * (dist / max_dist)**2`` row by row.

    Rows with ``max_dist == 0`` collapse to a flat (all zero) log kernel.
    """
    dist = np.asarray(dist, dtype=np.float64)
    max_dist = np.asarray(max_dist, dtype=np.float64)
    safe = np.where(max_dist > 0, max_dist, 1.0)
    ratio = dist / safe[:, None]
    out = -coef * (ratio * ratio)
    out[max_dist <= 0] = 0.0
    return out


def log_normalize_rows(logk: np.ndarray) -> np.ndarray:
    logk = np.asarray(logk, dtype=np.float64)
    m = logk.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(logk - m).sum(axis=1, keepdims=True))
    return logk - lse


def mixture_logsumexp(comp: np.ndarray, log_w: np.ndarray) -> np.ndarray:
    """``log sum_b exp(log_w[b] + comp[b, i])`` for every column ``i``."""
    z = np.asarray(comp, dtype=np.float64) + np.asarray(log_w, dtype=np.float64)[:, None]
    m = z.max(axis=0)
    return m + np.log(np.exp(z - m).sum(axis=0))
