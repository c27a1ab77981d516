"""Exception types shared across the package.

ConfigError maps to CLI exit code 1, every other JacspecError to exit 2.
"""


class JacspecError(Exception):
    """Base for all structured errors raised by this package."""


class ConfigError(JacspecError):
    """Bad configuration: unknown keys, inconsistent dims, missing files."""


class DimensionMismatch(JacspecError):
    """Operands have incompatible shapes."""


class NonFiniteEntries(JacspecError):
    """A matrix or vector failed finiteness validation."""


class LayerOverflow(JacspecError):
    """Forward pass produced a non-finite preactivation."""

    def __init__(self, layer: int):
        self.layer = layer
        super().__init__(f"non-finite preactivation at layer {layer}; lower sigma_w2 or depth")


class KinkProximity(JacspecError):
    """A preactivation sits too close to the ReLU kink for finite differencing."""

    def __init__(self, layer: int, index: int, value: float, eps: float):
        self.layer = layer
        self.index = index
        super().__init__(
            f"|preactivation[{index}]| = {abs(value):.3e} at layer {layer} is below "
            f"10*eps = {10 * eps:.3e}; resample the input or weights"
        )


class EmptyMask(JacspecError):
    """A pruning mask would keep zero entries."""
