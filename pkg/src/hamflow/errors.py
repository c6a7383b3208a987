"""Exception types shared across the package."""


class HamflowError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(HamflowError, ValueError):
    """A run configuration is malformed; the message names the offending key."""


class DomainError(HamflowError, ValueError):
    """A time or parameter lies outside the domain an object is defined on."""


class NumericalError(HamflowError, RuntimeError):
    """A numerical invariant failed (norm drift, divergence, imaginary residue)."""
