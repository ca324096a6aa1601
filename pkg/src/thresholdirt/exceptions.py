"""Exception types raised by thresholdirt."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function or support of a model."""


class MomentDivergenceError(ArithmeticError):
    """A requested moment does not exist (the defining integral diverges)."""


class DataError(ValueError):
    """Input data violate the requirements of the model."""


class NumericalError(ArithmeticError):
    """A likelihood or derived quantity could not be evaluated to a finite value."""


class NotNestedError(ValueError):
    """Two fits cannot be compared with a likelihood ratio test."""
