"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or out of range."""


class DomainError(ValueError):
    """An operation was called with inputs outside its valid domain."""


class NoSignalError(DomainError):
    """No LED delivered a usable signal to the receiver."""


class GeometryError(DomainError):
    """The requested geometric construction has no solution."""


class DegenerateGeometryError(GeometryError):
    """Bearing geometry is rank deficient (near-parallel rays)."""


class NumericalError(ArithmeticError):
    """A matrix that must be invertible for filtering turned out singular."""
