"""Scaled matrix products and spectral norm estimation.

Matrices are finite float64 C-contiguous 2-D numpy arrays, validated at the
public entry points. Long products are carried as (unit, log_scale) pairs so
norms far outside float64 range stay representable; only natural logs of
norms ever leave this module.

Everything routes through jacspec.kernels, whose summation order is pinned,
so results are bit-identical across repeated calls, worker threads, and the
compiled/fallback lanes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .errors import DimensionMismatch, NonFiniteEntries

NEG_INF = float("-inf")

# Power iteration defaults; restart-from-e1 handles a start vector that is
# orthogonal to (or trapped near) the leading eigenvector.
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
_STALL_CHECK_EVERY = 500
_STALL_MIN_DROP = 0.9  # residual must shrink below this factor per window

SVD_DIM_LIMIT = 512


def as_matrix(data) -> np.ndarray:
    """Validate and convert to a finite float64 C-contiguous 2-D array."""
    a = np.ascontiguousarray(data, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise NonFiniteEntries("matrix entries must be finite")
    return a


def as_vector(data, length: int | None = None) -> np.ndarray:
    a = np.ascontiguousarray(data, dtype=np.float64)
    if a.ndim != 1 or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty vector, got shape {a.shape}")
    if length is not None and a.shape[0] != length:
        raise DimensionMismatch(f"expected vector of length {length}, got {a.shape[0]}")
    if not np.isfinite(a).all():
        raise NonFiniteEntries("vector entries must be finite")
    return a


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return kernels.matmul(a, b)


@dataclass
class SpectralEstimate:
    value: float
    iterations: int
    converged: bool
    rel_residual: float


@dataclass
class ScaledMatrix:
    """A matrix stored as unit * exp(log_scale), Frobenius norm of unit kept near 1.

    log_scale == -inf flags a product that collapsed to exactly zero.
    """

    unit: np.ndarray
    log_scale: float

    @property
    def is_zero(self) -> bool:
        return self.log_scale == NEG_INF


def _power_run(a: np.ndarray, v0: np.ndarray, tol: float, max_iter: int):
    """One power-iteration run on a.T @ a from start v0; returns (lam, rel, iters)."""
    nrm0 = math.sqrt(kernels.dot(v0, v0))
    v = v0 / nrm0
    best_lam = 0.0
    best_rel = math.inf
    last_window_rel = math.inf
    for it in range(1, max_iter + 1):
        w = kernels.matvec(a, v)
        lam = kernels.dot(w, w)  # equals v.(A^T A v) for unit v
        if lam == 0.0:
            return 0.0, math.inf, it
        u = kernels.rmatvec(a, w)
        d = u - lam * v
        rel = math.sqrt(kernels.dot(d, d)) / lam
        if rel < best_rel:
            best_rel = rel
            best_lam = lam
        if rel <= tol:
            return lam, rel, it
        unorm = math.sqrt(kernels.dot(u, u))
        if unorm == 0.0:
            return 0.0, math.inf, it
        v = u / unorm
        if it % _STALL_CHECK_EVERY == 0:
            if best_rel > last_window_rel * _STALL_MIN_DROP:
                break  # plateaued above tol; let the caller restart
            last_window_rel = best_rel
    return best_lam, best_rel, it


def spectral_norm(a, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SpectralEstimate:
    """Largest singular value via power iteration on a.T @ a.

    Starts from the normalized all-ones vector for reproducibility; if the
    run stalls or dies (start orthogonal to the leading eigenvector, or in
    the null space), restarts once from the first basis vector.
    """
    a = as_matrix(a)
    if not a.any():
        return SpectralEstimate(value=0.0, iterations=0, converged=True, rel_residual=0.0)
    n = a.shape[1]
    lam, rel, iters = _power_run(a, np.ones(n), tol, max_iter)
    if rel > tol:
        e1 = np.zeros(n)
        e1[0] = 1.0
        lam2, rel2, iters2 = _power_run(a, e1, tol, max_iter)
        iters += iters2
        if (lam2, -rel2) > (lam, -rel):  # prefer larger estimate, then smaller residual
            lam, rel = lam2, rel2
    return SpectralEstimate(
        value=math.sqrt(lam),
        iterations=iters,
        converged=rel <= tol,
        rel_residual=rel,
    )


def _renormalize(sm: ScaledMatrix) -> ScaledMatrix:
    fro = math.sqrt(kernels.sq_frobenius(sm.unit))
    if fro == 0.0:
        return ScaledMatrix(unit=sm.unit, log_scale=NEG_INF)
    return ScaledMatrix(unit=sm.unit / fro, log_scale=sm.log_scale + math.log(fro))


def accumulate_product(factors: Iterable) -> ScaledMatrix:
    """Left-multiply a stream of factors into a ScaledMatrix.

    Stream order [F1, F2, ..., Fm] yields Fm @ ... @ F2 @ F1, renormalized by
    the Frobenius norm after every multiply. A product that hits exact zero
    keeps a zero unit and log_scale -inf; remaining factors are then only
    shape-checked.
    """
    state: ScaledMatrix | None = None
    for f in factors:
        f = as_matrix(f)
        if state is None:
            state = _renormalize(ScaledMatrix(unit=f, log_scale=0.0))
            continue
        if f.shape[1] != state.unit.shape[0]:
            raise DimensionMismatch(
                f"factor of shape {f.shape} cannot left-multiply product of shape {state.unit.shape}"
            )
        if state.is_zero:
            state = ScaledMatrix(unit=np.zeros((f.shape[0], state.unit.shape[1])), log_scale=NEG_INF)
            continue
        state = _renormalize(ScaledMatrix(unit=kernels.matmul(f, state.unit), log_scale=state.log_scale))
    if state is None:
        raise DimensionMismatch("accumulate_product needs at least one factor")
    return state


def scaled_log_spectral_norm(
    sm: ScaledMatrix, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> tuple[float, SpectralEstimate]:
    """Natural log of the spectral norm of a ScaledMatrix ((-inf, est) if zero)."""
    if sm.is_zero:
        return NEG_INF, SpectralEstimate(value=0.0, iterations=0, converged=True, rel_residual=0.0)
    est = spectral_norm(sm.unit, tol=tol, max_iter=max_iter)
    if est.value == 0.0:
        return NEG_INF, est
    return sm.log_scale + math.log(est.value), est


def svd_reference(a) -> np.ndarray:
    """Full singular values, descending; the independent oracle for spectral_norm.

    Backed by LAPACK rather than the iterative path above, so the two share
    no code. Sized for test matrices only.
    """
    a = as_matrix(a)
    if max(a.shape) > SVD_DIM_LIMIT:
        raise DimensionMismatch(f"svd_reference accepts at most {SVD_DIM_LIMIT} rows/cols, got {a.shape}")
    s = np.linalg.svd(a, compute_uv=False)
    return np.sort(s)[::-1]
