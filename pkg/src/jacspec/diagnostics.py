"""Growth-rate fits, stability verdicts, and independence diagnostics.

The growth fit is plain OLS of mean log-norm against depth over a window
(default starts at L = 20, past the small-depth transient). The chi-squared
independence test uses the 2x2 shortcut N (ad - bc)^2 / (row and column
margins) with the exact 1-dof tail p = erfc(sqrt(chi2 / 2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

DEFAULT_WINDOW_LMIN = 20
DEFAULT_EPSILON = 0.02  # nats per layer
KS_CRITICAL_1PCT = 1.63  # asymptotic K_alpha for the 1% level: D_crit = 1.63 / sqrt(N)


@dataclass
class GrowthFit:
    slope: float
    intercept: float
    residual_rms: float
    n_points: int
    lmin: int
    lmax: int
    dropped_nonfinite: int = 0


@dataclass
class StabilityVerdict:
    stable: bool
    label: str  # "stable" | "exploding" | "vanishing"
    slope: float
    epsilon: float


def fit_growth_rate(points, lmin: int = DEFAULT_WINDOW_LMIN, lmax: int | None = None) -> GrowthFit:
    """OLS of mean log-norm against depth over [lmin, lmax].

    points: iterable of (depth, mean_log_norm). Non-finite means (collapsed
    products) are dropped and counted; at least 3 finite points must remain.
    """
    pts = sorted((int(L), float(y)) for L, y in points)
    if lmax is None:
        lmax = max((L for L, _ in pts), default=0)
    window = [(L, y) for L, y in pts if lmin <= L <= lmax]
    finite = [(L, y) for L, y in window if math.isfinite(y)]
    dropped = len(window) - len(finite)
    if len(finite) < 3:
        raise ConfigError(f"need at least 3 finite points in [{lmin}, {lmax}], got {len(finite)}")
    ls = np.array([L for L, _ in finite], dtype=np.float64)
    ys = np.array([y for _, y in finite], dtype=np.float64)
    lbar = ls.mean()
    denom = float(np.sum((ls - lbar) ** 2))
    if denom == 0.0:
        raise ConfigError("all points share one depth; cannot fit a slope")
    slope = float(np.sum((ls - lbar) * (ys - ys.mean())) / denom)
    intercept = float(ys.mean() - slope * lbar)
    resid = ys - (intercept + slope * ls)
    return GrowthFit(
        slope=slope,
        intercept=intercept,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=len(finite),
        lmin=lmin,
        lmax=int(lmax),
        dropped_nonfinite=dropped,
    )


def classify_stability(fit: GrowthFit, epsilon: float = DEFAULT_EPSILON) -> StabilityVerdict:
    if epsilon <= 0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    if abs(fit.slope) <= epsilon:
        label = "stable"
    elif fit.slope > 0:
        label = "exploding"
    else:
        label = "vanishing"
    return StabilityVerdict(stable=label == "stable", label=label, slope=fit.slope, epsilon=epsilon)


# --- activation-independence diagnostics --------------------------------------

@dataclass
class BernoulliReport:
    pooled: float
    per_entry: np.ndarray
    n_traces: int


def bernoulli_fraction(traces, layer: int) -> BernoulliReport:
    """Fraction of active units in indicator layer `layer`, pooled and per entry."""
    if not traces:
        raise ConfigError("need at least one trace")
    rows = []
    for tr in traces:
        if not 0 <= layer < len(tr.indicators):
            raise ConfigError(f"layer {layer} out of range 0..{len(tr.indicators) - 1}")
        rows.append(tr.indicators[layer])
    stacked = np.stack(rows)
    per_entry = stacked.mean(axis=0)
    return BernoulliReport(pooled=float(stacked.mean()), per_entry=per_entry, n_traces=len(rows))


@dataclass
class Chi2Result:
    chi2: float
    p_value: float
    dof: int = 1


def chi2_independence(table) -> Chi2Result:
    """Pearson chi-squared for a 2x2 contingency table with positive margins."""
    t = np.asarray(table, dtype=np.float64)
    if t.shape != (2, 2):
        raise ConfigError(f"expected a 2x2 table, got shape {t.shape}")
    if (t < 0).any():
        raise ConfigError("table counts must be non-negative")
    a, b = t[0]
    c, d = t[1]
    n = a + b + c + d
    margins = (a + b, c + d, a + c, b + d)
    if any(m == 0 for m in margins):
        raise ConfigError("all margins of the table must be positive")
    chi2 = n * (a * d - b * c) ** 2 / (margins[0] * margins[1] * margins[2] * margins[3])
    return Chi2Result(chi2=float(chi2), p_value=math.erfc(math.sqrt(chi2 / 2.0)))


def cross_tabulate(xs, ys) -> np.ndarray:
    """2x2 counts of paired binary observations (1/0 by row, 1/0 by column)."""
    xs = np.asarray(xs, dtype=bool)
    ys = np.asarray(ys, dtype=bool)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ConfigError("need two equal-length 1-D binary sequences")
    return np.array(
        [
            [int(np.sum(xs & ys)), int(np.sum(xs & ~ys))],
            [int(np.sum(~xs & ys)), int(np.sum(~xs & ~ys))],
        ],
        dtype=np.int64,
    )


def activation_weight_stats(w, trace, layer: int) -> tuple:
    """(T_W, T_D): fraction of strictly positive weight entries and active units."""
    w = np.asarray(w, dtype=np.float64)
    if not 0 <= layer < len(trace.indicators):
        raise ConfigError(f"layer {layer} out of range 0..{len(trace.indicators) - 1}")
    t_w = float(np.mean(w > 0.0))
    t_d = float(np.mean(trace.indicators[layer]))
    return t_w, t_d


def pearson_corr(xs, ys) -> float:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise ConfigError("need two equal-length 1-D samples with at least 2 points")
    xd = xs - xs.mean()
    yd = ys - ys.mean()
    sx = float(np.sqrt(np.sum(xd**2)))
    sy = float(np.sqrt(np.sum(yd**2)))
    if sx == 0.0 or sy == 0.0:
        raise ConfigError("pearson_corr needs non-constant inputs")
    return float(np.sum(xd * yd) / (sx * sy))


def ks_uniformity(values) -> float:
    """One-sample Kolmogorov-Smirnov distance of values from U[0, 1]."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.ndim != 1 or v.size < 1:
        raise ConfigError("need a non-empty 1-D sample")
    if (v < 0).any() or (v > 1).any():
        raise ConfigError("values must lie in [0, 1]")
    n = v.size
    hi = float(np.max(np.arange(1, n + 1) / n - v))
    lo = float(np.max(v - np.arange(0, n) / n))
    return max(hi, lo)
