# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled circuit kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np

BACKEND = "compiled"

DEF SUM = 0
DEF PRODUCT = 1


def eval_forward(const signed char[::1] kinds, const int[::1] ptr,
                 const int[::1] idx, double[::1] values):
    cdef Py_ssize_t i, j, n = kinds.shape[0]
    cdef double acc
    with nogil:
        for i in range(n):
            if kinds[i] == SUM:
                acc = 0.0
                for j in range(ptr[i], ptr[i + 1]):
                    acc += values[idx[j]]
                values[i] = acc
            elif kinds[i] == PRODUCT:
                acc = 1.0
                for j in range(ptr[i], ptr[i + 1]):
                    acc *= values[idx[j]]
                values[i] = acc
    return values[n - 1] if n else 1.0


def eval_backward(const signed char[::1] kinds, const int[::1] ptr,
                  const int[::1] idx, const double[::1] values,
                  double[::1] derivs, Py_ssize_t root):
    cdef Py_ssize_t i, j, lo, hi, n = kinds.shape[0]
    cdef double di, acc, suffix
    prefix_arr = np.empty(idx.shape[0], dtype=np.float64)
    cdef double[::1] prefix = prefix_arr
    with nogil:
        for i in range(n):
            derivs[i] = 0.0
        derivs[root] = 1.0
        for i in range(n - 1, -1, -1):
            di = derivs[i]
            if di == 0.0:
                continue
            if kinds[i] == SUM:
                for j in range(ptr[i], ptr[i + 1]):
                    derivs[idx[j]] += di
            elif kinds[i] == PRODUCT:
                lo = ptr[i]
                hi = ptr[i + 1]
                acc = 1.0
                for j in range(lo, hi):
                    prefix[j] = acc
                    acc *= values[idx[j]]
                suffix = 1.0
                for j in range(hi - 1, lo - 1, -1):
                    derivs[idx[j]] += di * prefix[j] * suffix
                    suffix *= values[idx[j]]


def max_forward(const signed char[::1] kinds, const int[::1] ptr,
                const int[::1] idx, double[::1] values):
    cdef Py_ssize_t i, j, n = kinds.shape[0]
    cdef double acc, val
    cdef bint first
    with nogil:
        for i in range(n):
            if kinds[i] == SUM:
                acc = 0.0
                first = True
                for j in range(ptr[i], ptr[i + 1]):
                    val = values[idx[j]]
                    if first or val > acc:
                        acc = val
                        first = False
                values[i] = acc
            elif kinds[i] == PRODUCT:
                acc = 1.0
                for j in range(ptr[i], ptr[i + 1]):
                    acc *= values[idx[j]]
                values[i] = acc
    return values[n - 1] if n else 1.0
