"""ReLU MLP forward traces and input-output Jacobians as factor products.

The network is x -> W_in x -> (mask . W_1) relu(.) -> ... with preactivations
Y_0..Y_L. The Jacobian of Y_L against Y_{k-1} factors as

    J_k = (W_L D_{L-1}) (W_{L-1} D_{L-2}) ... (W_k D_{k-1})

where D_l = diag(1[Y_l > 0]) and the derivative at the kink is taken as 0.
Factors are built explicitly (a D just zeroes columns) and accumulated in
log scale; a finite-difference path provides the independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionMismatch, KinkProximity, LayerOverflow
from .linalg import (
    ScaledMatrix,
    SpectralEstimate,
    accumulate_product,
    as_matrix,
    as_vector,
    scaled_log_spectral_norm,
)
from .randomness import EnsembleSpec, RngStream, sample_gaussian_matrix, sample_gaussians, sample_hidden_layer


@dataclass(frozen=True)
class MlpConfig:
    d: int
    n: int
    L: int

    def __post_init__(self):
        if self.d < 1 or self.n < 1 or self.L < 1:
            raise ConfigError(f"d, n, L must all be >= 1, got d={self.d} n={self.n} L={self.L}")


@dataclass
class NetworkWeights:
    """Input matrix (n x d), L hidden matrices (n x n), optional per-layer masks."""

    w_in: np.ndarray
    hidden: list
    masks: list | None = None

    def __post_init__(self):
        self.w_in = as_matrix(self.w_in)
        self.hidden = [as_matrix(w) for w in self.hidden]
        n = self.w_in.shape[0]
        for idx, w in enumerate(self.hidden, start=1):
            if w.shape != (n, n):
                raise DimensionMismatch(f"hidden layer {idx} has shape {w.shape}, expected ({n}, {n})")
        if self.masks is not None:
            if len(self.masks) != len(self.hidden):
                raise DimensionMismatch(f"{len(self.masks)} masks for {len(self.hidden)} hidden layers")
            self.masks = [as_matrix(m) for m in self.masks]
            for idx, m in enumerate(self.masks, start=1):
                if m.shape != (n, n):
                    raise DimensionMismatch(f"mask {idx} has shape {m.shape}, expected ({n}, {n})")

    @property
    def n(self) -> int:
        return self.w_in.shape[0]

    @property
    def d(self) -> int:
        return self.w_in.shape[1]

    @property
    def depth(self) -> int:
        return len(self.hidden)

    def effective_hidden(self, layer: int) -> np.ndarray:
        """Masked weight matrix of hidden layer `layer` (1-based)."""
        w = self.hidden[layer - 1]
        if self.masks is None:
            return w
        return w * self.masks[layer - 1]


@dataclass
class ForwardTrace:
    """Preactivations Y_0..Y_L and activation indicators D_0..D_L."""

    input: np.ndarray
    preactivations: list
    indicators: list


def sample_weights(config: MlpConfig, ensemble: EnsembleSpec, stream_factory) -> NetworkWeights:
    """Draw weights; stream_factory(role, layer) supplies one RngStream per matrix.

    Roles: ("w_in", 0) for the input matrix, ("w", l) for hidden layer l.
    """
    w_in_var = (ensemble.sigma_w2 if ensemble.kind == "iid" else 2.0) / config.n
    w_in = sample_gaussian_matrix(stream_factory("w_in", 0), config.n, config.d, w_in_var)
    hidden = [sample_hidden_layer(stream_factory("w", l), config.n, ensemble) for l in range(1, config.L + 1)]
    return NetworkWeights(w_in=w_in, hidden=hidden)


def synthetic_input(stream: RngStream, d: int) -> np.ndarray:
    """Unit-norm Gaussian input; ReLU nets are positively homogeneous so the
    indicator patterns are invariant to the input's length anyway."""
    v = sample_gaussians(stream, d, 1.0)
    return v / np.sqrt(kernels.dot(v, v))


def forward(weights: NetworkWeights, x) -> ForwardTrace:
    x = as_vector(x, weights.d)
    y = kernels.matvec(weights.w_in, x)
    if not np.isfinite(y).all():
        raise LayerOverflow(0)
    pre = [y]
    for layer in range(1, weights.depth + 1):
        z = np.maximum(pre[-1], 0.0)
        y = kernels.matvec(weights.effective_hidden(layer), z)
        if not np.isfinite(y).all():
            raise LayerOverflow(layer)
        pre.append(y)
    indicators = [(pre[l] > 0.0).astype(np.float64) for l in range(weights.depth + 1)]
    return ForwardTrace(input=x, preactivations=pre, indicators=indicators)


def jacobian(weights: NetworkWeights, trace: ForwardTrace, k: int = 1) -> ScaledMatrix:
    """Scaled product (W_L D_{L-1}) ... (W_k D_{k-1}); left factor is layer L."""
    L = weights.depth
    if not 1 <= k <= L:
        raise ConfigError(f"k must be in 1..{L}, got {k}")
    if len(trace.indicators) != L + 1:
        raise DimensionMismatch(f"trace has {len(trace.indicators)} indicator layers, weights have {L}")
    factors = (weights.effective_hidden(l) * trace.indicators[l - 1][None, :] for l in range(k, L + 1))
    return accumulate_product(factors)


def jacobian_log_norm(
    weights: NetworkWeights, trace: ForwardTrace, k: int = 1, tol: float = 1e-10, max_iter: int = 10000
) -> tuple[float, SpectralEstimate]:
    """Natural log of the spectral norm of J_k; -inf when the product is zero."""
    return scaled_log_spectral_norm(jacobian(weights, trace, k), tol=tol, max_iter=max_iter)


def _propagate(effective: list, y0: np.ndarray) -> np.ndarray:
    cur = y0
    for w in effective:
        cur = kernels.matvec(w, np.maximum(cur, 0.0))
    return cur


def finite_difference_jacobian(weights: NetworkWeights, trace: ForwardTrace, k: int = 1, eps: float = 1e-5) -> np.ndarray:
    """Central differences of Y_L against Y_{k-1}; the oracle for jacobian().

    Exact for ReLU up to rounding, provided no preactivation on the
    recomputed path sits within 10*eps of the kink; raises KinkProximity
    otherwise so the caller can resample.
    """
    L = weights.depth
    if not 1 <= k <= L:
        raise ConfigError(f"k must be in 1..{L}, got {k}")
    for layer in range(k - 1, L):
        vals = trace.preactivations[layer]
        near = np.abs(vals) <= 10.0 * eps
        if near.any():
            idx = int(np.argmax(near))
            raise KinkProximity(layer, idx, float(vals[idx]), eps)
    effective = [weights.effective_hidden(l) for l in range(k, L + 1)]
    base = trace.preactivations[k - 1]
    n = weights.n
    out = np.empty((n, n), dtype=np.float64)
    for j in range(n):
        bumped = base.copy()
        bumped[j] = base[j] + eps
        plus = _propagate(effective, bumped)
        bumped[j] = base[j] - eps
        minus = _propagate(effective, bumped)
        out[:, j] = (plus - minus) / (2.0 * eps)
    return out
