"""Exception types shared across the package."""


class DomainError(KeyError):
    """A group element fell outside the finite table of a map."""

    def __str__(self):
        return str(self.args[0]) if self.args else "element outside map domain"


class ResourceCapError(RuntimeError):
    """A ball or matrix would exceed the configured size cap."""


class GapClosedError(ArithmeticError):
    """The spectrum of an almost projection touches 1/2."""


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""
