# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense kernels with a pinned floating-point operation order.

The summation order of every routine here is part of its contract:
_pykernels replays the identical order, so the two lanes produce
bit-identical float64 results. Keep multiplies and adds separate
(the build passes -ffp-contract=off) and never reassociate the loops.
"""

import numpy as np

BACKEND = "compiled"


def matmul(double[:, ::1] a, double[:, ::1] b):
    """Product a @ b; element (i, j) accumulates over k in ascending order."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t kd = a.shape[1]
    cdef Py_ssize_t p = b.shape[1]
    if b.shape[0] != kd:
        raise ValueError(f"matmul: inner dims differ ({kd} vs {b.shape[0]})")
    out_arr = np.zeros((m, p), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, k, j
    cdef double t
    with nogil:
        for i in range(m):
            for k in range(kd):
                t = a[i, k]
                for j in range(p):
                    out[i, j] = out[i, j] + t * b[k, j]
    return out_arr


def matvec(double[:, ::1] a, double[::1] v):
    """a @ v; out[i] accumulates a[i, j] * v[j] over ascending j."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t kd = a.shape[1]
    if v.shape[0] != kd:
        raise ValueError(f"matvec: got vector of length {v.shape[0]}, need {kd}")
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double s
    with nogil:
        for i in range(m):
            s = 0.0
            for j in range(kd):
                s = s + a[i, j] * v[j]
            out[i] = s
    return out_arr


def rmatvec(double[:, ::1] a, double[::1] v):
    """a.T @ v; out[j] accumulates a[i, j] * v[i] over ascending i."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t kd = a.shape[1]
    if v.shape[0] != m:
        raise ValueError(f"rmatvec: got vector of length {v.shape[0]}, need {m}")
    out_arr = np.zeros(kd, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double t
    with nogil:
        for i in range(m):
            t = v[i]
            for j in range(kd):
                out[j] = out[j] + a[i, j] * t
    return out_arr


def sq_frobenius(double[:, ::1] a):
    """Sum of squared entries: per-row sums over ascending j, rows totalled in ascending i."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t kd = a.shape[1]
    cdef Py_ssize_t i, j
    cdef double r, total = 0.0
    with nogil:
        for i in range(m):
            r = 0.0
            for j in range(kd):
                r = r + a[i, j] * a[i, j]
            total = total + r
    return total


def dot(double[::1] u, double[::1] v):
    """Inner product accumulated strictly left to right."""
    cdef Py_ssize_t n = u.shape[0]
    if v.shape[0] != n:
        raise ValueError(f"dot: lengths differ ({n} vs {v.shape[0]})")
    cdef Py_ssize_t i
    cdef double s = 0.0
    with nogil:
        for i in range(n):
            s = s + u[i] * v[i]
    return s
