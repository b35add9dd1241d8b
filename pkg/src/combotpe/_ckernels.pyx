# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np

from libc.math cimport exp, log


def perm_l1_rows(perms, idx):
    cdef const signed char[:, ::1] P = np.ascontiguousarray(perms, dtype=np.int8)
    cdef const long long[::1] J = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t C = P.shape[0], p = P.shape[1], m = J.shape[0]
    out = np.empty((m, C), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef Py_ssize_t r, i, k
    cdef long long j
    cdef int acc, diff
    for r in range(m):
        j = J[r]
        for i in range(C):
            acc = 0
            for k in range(p):
                diff = P[i, k] - P[j, k]
                acc += diff if diff >= 0 else -diff
            O[r, i] = acc
    return out


def metric_log_kernel(dist, max_dist, double coef):
    cdef const double[:, ::1] D = np.ascontiguousarray(dist, dtype=np.float64)
    cdef const double[::1] M = np.ascontiguousarray(max_dist, dtype=np.float64)
    cdef Py_ssize_t m = D.shape[0], C = D.shape[1], r, i
    out = np.empty((m, C), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double inv, ratio
    for r in range(m):
        if M[r] <= 0:
            for i in range(C):
                O[r, i] = 0.0
            continue
        inv = M[r]
        for i in range(C):
            ratio = D[r, i] / inv
            O[r, i] = -coef * (ratio * ratio)
    return out


def log_normalize_rows(logk):
    cdef const double[:, ::1] L = np.ascontiguousarray(logk, dtype=np.float64)
    cdef Py_ssize_t m = L.shape[0], C = L.shape[1], r, i
    out = np.empty((m, C), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double mx, s, lse
    for r in range(m):
        mx = L[r, 0]
        for i in range(1, C):
            if L[r, i] > mx:
                mx = L[r, i]
        s = 0.0
        for i in range(C):
            s += exp(L[r, i] - mx)
        lse = mx + log(s)
        for i in range(C):
            O[r, i] = L[r, i] - lse
    return out


def mixture_logsumexp(comp, log_w):
    cdef const double[:, ::1] Z = np.ascontiguousarray(comp, dtype=np.float64)
    cdef const double[::1] W = np.ascontiguousarray(log_w, dtype=np.float64)
    cdef Py_ssize_t B = Z.shape[0], n = Z.shape[1], b, i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] O = out
    cdef double mx, s, v
    for i in range(n):
        mx = W[0] + Z[0, i]
        for b in range(1, B):
            v = W[b] + Z[b, i]
            if v > mx:
                mx = v
        s = 0.0
        for b in range(B):
            s += exp(W[b] + Z[b, i] - mx)
        O[i] = mx + log(s)
    return out
