"""Exception types shared across the toolkit."""


class EvsynthError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(EvsynthError):
    """Invalid configuration value (non-positive dims, bad key, ...)."""


class UsageError(EvsynthError):
    """Bad command-line invocation."""


class FormatError(EvsynthError):
    """File does not match its declared format (magic, version, truncation)."""


class RangeError(EvsynthError):
    """Value falls outside its admissible range (coords, timestamps)."""


class CollisionError(EvsynthError):
    """Two sparse records map to the same (pixel, timestep) cell."""


class LengthMismatchError(EvsynthError):
    """Two sequences that must share a length do not."""


class ShapeMismatchError(EvsynthError):
    """Two arrays that must share a shape do not."""


class ShapeError(EvsynthError):
    """Array has the wrong rank or an inconsistent extent."""


class CacheMismatchError(EvsynthError):
    """Backward pass was handed a cache from a different forward pass."""


class DivergenceError(EvsynthError):
    """Training produced a non-finite loss."""
