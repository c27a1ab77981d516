"""jacspec: input-output Jacobians of deep ReLU networks as random matrix products.

Builds the layer factors explicitly, tracks their product in log scale,
and measures spectral norms across depth sweeps under pruning masks and
correlated weight draws. Everything downstream of a (config, master_seed)
pair is deterministic, including across worker-thread counts.
"""

__version__ = "0.1.0"

from . import errors  # noqa: F401
