"""Numpy fallback kernels, operation-order identical to the compiled lane.

Reductions are vectorized over the axis that is NOT being summed, so each
output element sees the same sequence of IEEE multiply/add operations as
the scalar loops in _ckernels. That makes the two lanes bit-identical,
which the kernel tests assert outright.
"""

import numpy as np

BACKEND = "python"


def matmul(a, b):
    m, kd = a.shape
    if b.shape[0] != kd:
        raise ValueError(f"matmul: inner dims differ ({kd} vs {b.shape[0]})")
    p = b.shape[1]
    out = np.zeros((m, p), dtype=np.float64)
    tmp = np.empty((m, p), dtype=np.float64)
    # element (i, j) accumulates a[i, k] * b[k, j] over ascending k
    for k in range(kd):
        np.multiply(a[:, k, None], b[k, :], out=tmp)
        out += tmp
    return out


def matvec(a, v):
    m, kd = a.shape
    if v.shape[0] != kd:
        raise ValueError(f"matvec: got vector of length {v.shape[0]}, need {kd}")
    out = np.zeros(m, dtype=np.float64)
    for j in range(kd):
        out += a[:, j] * v[j]
    return out


def rmatvec(a, v):
    m, kd = a.shape
    if v.shape[0] != m:
        raise ValueError(f"rmatvec: got vector of length {v.shape[0]}, need {m}")
    out = np.zeros(kd, dtype=np.float64)
    for i in range(m):
        out += a[i, :] * v[i]
    return out


def sq_frobenius(a):
    m, kd = a.shape
    rows = np.zeros(m, dtype=np.float64)
    for j in range(kd):
        c = a[:, j]
        rows += c * c
    total = 0.0
    for r in rows.tolist():
        total += r
    return total


def dot(u, v):
    if u.shape[0] != v.shape[0]:
        raise ValueError(f"dot: lengths differ ({u.shape[0]} vs {v.shape[0]})")
    s = 0.0
    for x, y in zip(u.tolist(), v.tolist()):
        s += x * y
    return s
