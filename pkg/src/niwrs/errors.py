"""Exception types raised across the package."""


class NiwError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(NiwError, ValueError):
    pass


class NotPositiveDefinite(NiwError, ValueError):
    pass


class InvalidHyperparameter(NiwError, ValueError):
    pass


class TooFewPilotSamples(NiwError, ValueError):
    pass


class IndexOutOfRange(NiwError, IndexError):
    pass


class RuleInputMismatch(NiwError, TypeError):
    pass


class UnsupportedRule(NiwError, ValueError):
    pass


class InvalidDof(NiwError, ValueError):
    pass


class DegenerateWeights(NiwError, RuntimeError):
    """Importance weights collapsed onto too few draws."""


class InvalidRho(NiwError, ValueError):
    pass


class DomainError(NiwError, ValueError):
    """A logarithm or denominator argument of the borehole model is nonpositive."""


class EmptyTable(NiwError, ValueError):
    pass
