"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class UnsupportedConfigurationError(ValueError):
    """The antenna configuration is outside the closed-form's validated envelope."""


class NoCeilingError(ValueError):
    """Capacity is unbounded for the given configuration, so no ceiling exists."""


class NumericalError(ArithmeticError):
    """A computation produced a non-finite or otherwise untrustworthy value."""
