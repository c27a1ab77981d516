"""Seeded random streams and weight ensembles.

Generator contract, fixed for the life of this package: a stream is
numpy's PCG64 seeded with SeedSequence(entropy=master_seed,
spawn_key=(stream_id,)). Gaussians come from the Box-Muller transform
applied to the generator's uniform doubles (pairs (u1, u2), radius from
1-u1 so the log argument sits in (0, 1]), never from numpy's normal(),
so the value sequence survives numpy's distribution-method changes.

Stream ids are taken from SHA-256 over a textual role label, so any
(master_seed, role) pair maps to the same stream everywhere - the basis
for the thread-count independence guarantee upstream.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


@dataclass
class RngStream:
    master_seed: int
    stream_id: int
    gen: np.random.Generator


def make_stream(master_seed: int, stream_id: int) -> RngStream:
    if master_seed < 0 or stream_id < 0:
        raise ConfigError("master_seed and stream_id must be non-negative")
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream_id,))
    return RngStream(master_seed=master_seed, stream_id=stream_id, gen=np.random.Generator(np.random.PCG64(seq)))


def stable_stream_id(*parts) -> int:
    """Map a role label like ("w", n, L, seed, layer) to a fixed 63-bit id."""
    text = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF


def derive_stream(master_seed: int, *parts) -> RngStream:
    return make_stream(master_seed, stable_stream_id(*parts))


def sample_gaussians(stream: RngStream, count: int, variance: float) -> np.ndarray:
    """Box-Muller on the stream's uniforms; consumes ceil(count/2) pairs."""
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if variance < 0:
        raise ConfigError(f"variance must be >= 0, got {variance}")
    npairs = (count + 1) // 2
    u = stream.gen.random((npairs, 2))
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = TWO_PI * u[:, 1]
    out = np.empty(2 * npairs, dtype=np.float64)
    out[0::2] = radius * np.cos(theta)
    out[1::2] = radius * np.sin(theta)
    return math.sqrt(variance) * out[:count]


def sample_gaussian_matrix(stream: RngStream, rows: int, cols: int, variance: float) -> np.ndarray:
    """i.i.d. N(0, variance) matrix, filled row-major from the stream."""
    return sample_gaussians(stream, rows * cols, variance).reshape(rows, cols)


def sample_correlated_layer(
    stream: RngStream, n: int, eta: float, base_variance: float, normalize: bool = False
) -> np.ndarray:
    """One hidden layer with a shared additive component: W_ind + eta * w.

    The independent matrix is drawn first and the shared scalar after it, so
    at eta = 0 the result is bit-identical to sample_gaussian_matrix on the
    same stream. Every pair of distinct entries has correlation
    eta^2 / (1 + eta^2); normalize=True divides by sqrt(1 + eta^2) to restore
    the per-entry base variance.
    """
    if eta < 0:
        raise ConfigError(f"eta must be >= 0, got {eta}")
    w_ind = sample_gaussian_matrix(stream, n, n, base_variance)
    shared = sample_gaussians(stream, 1, base_variance)[0]
    out = w_ind + eta * shared
    if normalize:
        out /= math.sqrt(1.0 + eta * eta)
    return out


@dataclass(frozen=True)
class EnsembleSpec:
    """Weight ensemble: i.i.d. at sigma_w2, or correlated around base 2/n."""

    kind: str  # "iid" | "correlated"
    sigma_w2: float = 2.0
    eta: float = 0.0
    normalize: bool = False

    def __post_init__(self):
        if self.kind not in {"iid", "correlated"}:
            raise ConfigError(f"unknown ensemble kind {self.kind!r}")
        if self.sigma_w2 <= 0:
            raise ConfigError(f"sigma_w2 must be > 0, got {self.sigma_w2}")
        if self.eta < 0:
            raise ConfigError(f"eta must be >= 0, got {self.eta}")


def iid_ensemble(sigma_w2: float) -> EnsembleSpec:
    return EnsembleSpec(kind="iid", sigma_w2=sigma_w2)


def correlated_ensemble(eta: float, normalize: bool = False) -> EnsembleSpec:
    # base variance is pinned to the critical 2/n; sigma_w2 field records that
    return EnsembleSpec(kind="correlated", sigma_w2=2.0, eta=eta, normalize=normalize)


def sample_hidden_layer(stream: RngStream, n: int, ensemble: EnsembleSpec) -> np.ndarray:
    if ensemble.kind == "iid":
        return sample_gaussian_matrix(stream, n, n, ensemble.sigma_w2 / n)
    return sample_correlated_layer(stream, n, ensemble.eta, 2.0 / n, ensemble.normalize)
