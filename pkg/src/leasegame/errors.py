"""Exception types raised across the package."""


class LeaseGameError(Exception):
    """Base class for all errors raised by leasegame."""


class ConfigurationError(LeaseGameError, ValueError):
    """Invalid configuration value.

    ``key`` names the offending configuration entry when one is known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DomainError(LeaseGameError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateGeometryError(LeaseGameError, ValueError):
    """Transmitter and receiver coincide, so the path gain is infinite."""
