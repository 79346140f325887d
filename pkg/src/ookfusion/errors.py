"""Exception types shared across the package."""


class OokFusionError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(OokFusionError):
    """A run configuration is malformed or violates a documented precondition."""


class DegenerateTrainingError(OokFusionError):
    """Pilot training produced unusable reference values (e.g. all-zero amplitudes)."""


class NumericalError(OokFusionError):
    """A numerical routine failed to converge or produced a non-finite result."""
