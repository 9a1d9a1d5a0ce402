"""Exception hierarchy shared across the package."""


class ShaftPowerError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ShaftPowerError, ValueError):
    """An input lies outside the mathematical domain of a formula."""


class SchemaError(ShaftPowerError, ValueError):
    """Data does not match the expected schema (columns, features, shapes)."""


class UsageError(ShaftPowerError, ValueError):
    """An operation was invoked with unusable arguments or degenerate data."""


class DivergenceError(ShaftPowerError, RuntimeError):
    """An optimization run produced non-finite values and could not recover."""
