"""Pruning masks, rescale factors, and stability-condition diagnostics.

Masks are binary patterns times one positive scale factor. Three mask
builders (Bernoulli random, magnitude threshold, magnitude top-r) combine
with four scalings:

  none          keep the surviving weights as they are
  analytic      the closed-form factor: (1-s)^{-1/2} for random masks, the
                deterministic threshold formula b(t, n) for magnitude masks
  random_factor (1 - realized sparsity)^{-1/2} regardless of mask method
  calibrated    sqrt(2n / sum of kept w^2): drives the matrix-average
                second-moment statistic to exactly 1

The analytic magnitude factor is kept verbatim even though, away from its
asymptotic validity window, it disagrees sharply with the calibrated one;
ScaleReport carries both plus their ratio so the gap stays visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, EmptyMask
from .linalg import as_matrix
from .randomness import RngStream

SCALING_MODES = ("none", "analytic", "random_factor", "calibrated")


# --- special functions -------------------------------------------------------

def erf(x: float) -> float:
    return math.erf(x)


def erfc(x: float) -> float:
    return math.erfc(x)


def erf_inv(y: float) -> float:
    """Inverse of erf on (-1, 1): rational first guess + Newton on erf."""
    if not -1.0 < y < 1.0:
        raise ConfigError(f"erf_inv needs -1 < y < 1, got {y}")
    if y == 0.0:
        return 0.0
    # Winitzki's approximation, good to ~1e-2 everywhere; Newton does the rest
    a = 0.147
    ln1my2 = math.log1p(-y * y)
    t = 2.0 / (math.pi * a) + 0.5 * ln1my2
    x = math.copysign(math.sqrt(math.sqrt(t * t - ln1my2 / a) - t), y)
    two_over_sqrtpi = 2.0 / math.sqrt(math.pi)
    for _ in range(60):
        err = math.erf(x) - y
        if err == 0.0:
            break
        step = err / (two_over_sqrtpi * math.exp(-x * x))
        nxt = x - step
        if nxt == x:
            break
        x = nxt
    return x


# --- masks -------------------------------------------------------------------

@dataclass
class Mask:
    """Binary pattern times a single positive scale; matrix entries are 0 or scale."""

    matrix: np.ndarray
    scale: float
    kept_count: int
    method: str
    s: float | None = None
    t: float | None = None
    r: int | None = None

    @property
    def beta_n(self) -> float:
        return self.scale

    @property
    def realized_sparsity(self) -> float:
        return 1.0 - self.kept_count / self.matrix.size


def _check_scaling(scaling: str) -> None:
    if scaling not in SCALING_MODES:
        raise ConfigError(f"scaling must be one of {SCALING_MODES}, got {scaling!r}")


def calibrated_scale(w, keep_pattern, n: int) -> float:
    """sqrt(2n / sum of kept squared weights).

    With this factor the matrix-average of the per-row second-moment sums
    0.5 * sum_k (b w)^2 equals exactly 1.
    """
    w = as_matrix(w)
    pattern = np.asarray(keep_pattern, dtype=np.float64)
    if pattern.shape != w.shape:
        raise DimensionMismatch(f"pattern shape {pattern.shape} != weight shape {w.shape}")
    kept_sq = float(np.sum(w * w * pattern))
    if kept_sq == 0.0:
        raise EmptyMask("no surviving weight mass to calibrate against")
    return math.sqrt(2.0 * n / kept_sq)


def magnitude_scale_analytic(t: float, n: int) -> float:
    """Deterministic threshold factor ((sqrt(2 pi) e^{n t^2 / 2}) / (t n^{3/2}))^{1/2}."""
    if t <= 0:
        raise ConfigError(f"threshold t must be > 0, got {t}")
    return math.sqrt(math.sqrt(2.0 * math.pi) * math.exp(n * t * t / 2.0) / (t * n ** 1.5))


def threshold_validity_warnings(t: float, n: int) -> list:
    """The analytic factor assumes t^2 n <= 4 ln n - c ln ln n for some c > 7."""
    warnings = []
    if n >= 3:
        budget = 4.0 * math.log(n) - 7.0 * math.log(math.log(n))
        if t * t * n >= budget:
            warnings.append(
                f"threshold outside analytic validity window: n*t^2 = {n * t * t:.3f} "
                f">= 4 ln n - 7 ln ln n = {budget:.3f}"
            )
    else:
        warnings.append("analytic window undefined for n < 3")
    return warnings


def _finish_mask(pattern: np.ndarray, w, scaling: str, method: str, *, n: int,
                 s=None, t=None, r=None) -> Mask:
    kept = int(pattern.sum())
    if kept == 0:
        raise EmptyMask(f"{method} mask keeps no entries")
    if scaling == "none":
        scale = 1.0
    elif scaling == "calibrated":
        scale = calibrated_scale(w, pattern, n)
    elif scaling == "random_factor":
        realized = 1.0 - kept / pattern.size
        scale = 1.0 / math.sqrt(1.0 - realized)
    elif method == "random":  # analytic
        scale = 1.0 / math.sqrt(1.0 - s)
    else:  # analytic, magnitude methods
        scale = magnitude_scale_analytic(t, n)
    return Mask(matrix=pattern * scale, scale=scale, kept_count=kept, method=method, s=s, t=t, r=r)


def random_mask(stream: RngStream, n: int, s: float, scaling: str = "none", weights=None) -> Mask:
    """Bernoulli(1 - s) keep pattern; calibrated scaling needs the weights it will mask."""
    _check_scaling(scaling)
    if not 0.0 <= s < 1.0:
        raise ConfigError(f"sparsity s must be in [0, 1), got {s}")
    if scaling == "calibrated" and weights is None:
        raise ConfigError("calibrated scaling needs the weight matrix")
    pattern = (stream.gen.random((n, n)) < (1.0 - s)).astype(np.float64)
    return _finish_mask(pattern, weights, scaling, "random", n=n, s=s)


def magnitude_mask_threshold(w, n: int, t: float, scaling: str = "none") -> Mask:
    """Keep entries with |w| strictly above t."""
    _check_scaling(scaling)
    w = as_matrix(w)
    if w.shape != (n, n):
        raise DimensionMismatch(f"weights have shape {w.shape}, expected ({n}, {n})")
    if t <= 0:
        raise ConfigError(f"threshold t must be > 0, got {t}")
    pattern = (np.abs(w) > t).astype(np.float64)
    return _finish_mask(pattern, w, scaling, "magnitude_threshold", n=n, t=t)


def top_r_threshold(n: int, r: int) -> float:
    """Threshold equivalent to keeping the r largest: (2/sqrt(n)) erf_inv(1 - r/(n^2+1))."""
    return (2.0 / math.sqrt(n)) * erf_inv(1.0 - r / (n * n + 1.0))


def magnitude_mask_top_r(w, n: int, r: int, scaling: str = "none") -> Mask:
    """Keep the r largest |entries|; ties favor the earlier row-major index."""
    _check_scaling(scaling)
    w = as_matrix(w)
    if w.shape != (n, n):
        raise DimensionMismatch(f"weights have shape {w.shape}, expected ({n}, {n})")
    if not 1 <= r <= n * n:
        raise ConfigError(f"r must be in 1..{n * n}, got {r}")
    order = np.argsort(-np.abs(w).ravel(), kind="stable")
    flat = np.zeros(n * n, dtype=np.float64)
    flat[order[:r]] = 1.0
    pattern = flat.reshape(n, n)
    return _finish_mask(pattern, w, scaling, "magnitude_top_r", n=n, t=top_r_threshold(n, r), r=r)


def log_power_rank(n: int, c: float) -> int:
    """r = ceil(n (ln n)^c), clipped into 1..n^2."""
    r = math.ceil(n * math.log(n) ** c)
    return max(1, min(r, n * n))


def expected_kept_fraction(t: float, n: int) -> float:
    """P(|w| > t) for w ~ N(0, 2/n): 1 - erf(t sqrt(n) / 2)."""
    return 1.0 - math.erf(t * math.sqrt(n) / 2.0)


# --- scale reporting ---------------------------------------------------------

@dataclass
class ScaleReport:
    method: str
    analytic: float | None
    calibrated: float
    ratio: float | None  # analytic / calibrated
    second_moment_stat: float  # matrix-average of 0.5 * row sums of (b w)^2 at the analytic scale
    warnings: list = field(default_factory=list)


def second_moment_average(w, pattern, scale: float) -> float:
    """Matrix-average of the per-row sums 0.5 * sum_k (scale * b * w)^2."""
    w = as_matrix(w)
    masked = w * np.asarray(pattern, dtype=np.float64) * scale
    return 0.5 * float(np.sum(masked * masked)) / w.shape[0]


def scale_report(w, mask: Mask, n: int) -> ScaleReport:
    pattern = (mask.matrix > 0).astype(np.float64)
    calibrated = calibrated_scale(w, pattern, n)
    warnings = []
    if mask.method == "random":
        analytic = 1.0 / math.sqrt(1.0 - mask.s)
    else:
        analytic = magnitude_scale_analytic(mask.t, n)
        warnings = threshold_validity_warnings(mask.t, n)
    return ScaleReport(
        method=mask.method,
        analytic=analytic,
        calibrated=calibrated,
        ratio=analytic / calibrated,
        second_moment_stat=second_moment_average(w, pattern, analytic),
        warnings=warnings,
    )


# --- stability margins and condition checks ----------------------------------

def edge_of_stability_margin(n: int, s: float) -> float:
    """(1 - s) n / (ln n)^4: >> 1 inside the stable phase, << 1 past its edge."""
    if n < 2:
        raise ConfigError("margin needs n >= 2")
    return (1.0 - s) * n / math.log(n) ** 4


def heuristic_breakdown_density(n: int) -> float:
    """Observed kept-density level where depth sweeps start to deviate: log10(n)/n."""
    return math.log10(n) / n


@dataclass
class ConditionReport:
    """Monte Carlo estimates of the three stability conditions.

    cond2/cond3 come in two forms: the max-row/max-entry statistics match the
    stability conditions as stated, but their Monte Carlo estimates are biased
    upward by the max over n (or n^2) noisy means, so the pooled forms carry
    the standard errors used for 'consistent with zero' checks.
    """

    n: int
    mc_samples: int
    beta_n: float
    cond1: float  # (ln n)^4 / n * beta_n^2
    cond2_max_row: float
    cond2_pooled: float
    cond2_pooled_stderr: float
    cond3_max_entry: float
    cond3_pooled: float
    cond3_pooled_stderr: float


def check_stability_conditions(mask_sampler, weight_sampler, n: int, mc_samples: int,
                               stream: RngStream) -> ConditionReport:
    """Estimate the stability conditions for a (mask, weight) ensemble.

    mask_sampler(stream, weights) -> mask matrix (entries >= 0); may ignore
    weights or depend on them (magnitude masks). weight_sampler(stream) -> W.
    """
    if mc_samples < 2:
        raise ConfigError("mc_samples must be >= 2")
    beta = 0.0
    sum_bw2 = np.zeros((n, n))
    sum_bw = np.zeros((n, n))
    row_sample_means = np.empty(mc_samples)  # matrix-mean of 0.5 * row sums, per sample
    entry_sample_means = np.empty(mc_samples)  # matrix-mean of b w, per sample
    for m in range(mc_samples):
        w = weight_sampler(stream)
        b = mask_sampler(stream, w)
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (n, n) or w.shape != (n, n):
            raise DimensionMismatch("samplers must produce n x n matrices")
        beta = max(beta, float(b.max()))
        bw = b * w
        bw2 = bw * bw
        sum_bw2 += bw2
        sum_bw += bw
        row_sample_means[m] = 0.5 * float(bw2.sum()) / n
        entry_sample_means[m] = float(bw.mean())
    mean_bw2 = sum_bw2 / mc_samples
    mean_bw = sum_bw / mc_samples
    row_stats = 0.5 * mean_bw2.sum(axis=1) - 1.0
    cond2_max_row = float(np.abs(row_stats).max())
    cond2_pooled = abs(float(row_sample_means.mean()) - 1.0)
    cond2_stderr = float(row_sample_means.std(ddof=1)) / math.sqrt(mc_samples)
    cond3_max_entry = n * float(np.abs(mean_bw).max())
    cond3_pooled = n * abs(float(entry_sample_means.mean()))
    cond3_stderr = n * float(entry_sample_means.std(ddof=1)) / math.sqrt(mc_samples)
    return ConditionReport(
        n=n,
        mc_samples=mc_samples,
        beta_n=beta,
        cond1=math.log(n) ** 4 / n * beta * beta,
        cond2_max_row=cond2_max_row,
        cond2_pooled=cond2_pooled,
        cond2_pooled_stderr=cond2_stderr,
        cond3_max_entry=cond3_max_entry,
        cond3_pooled=cond3_pooled,
        cond3_pooled_stderr=cond3_stderr,
    )
