"""Exception hierarchy shared by the library and the command line."""


class QutritESDError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(QutritESDError, ValueError):
    """A parameter lies outside the domain where the quantity is defined."""


class ConfigurationError(QutritESDError, ValueError):
    """Run settings violate a numerical precondition (step size, sampling)."""


class IntegrationError(QutritESDError, ArithmeticError):
    """The integrated state left the set of density matrices."""


class ResolutionError(QutritESDError, ArithmeticError):
    """An evolution trace is sampled too coarsely to resolve its events."""
