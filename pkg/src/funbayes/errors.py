"""Exception hierarchy shared by all funbayes modules."""


class FunBayesError(Exception):
    """Base class for all funbayes errors."""


class DimensionError(FunBayesError):
    """Array shapes or grid lengths do not match."""


class ParameterError(FunBayesError):
    """A parameter is outside its valid range or incompatible with the data."""


class DataError(FunBayesError):
    """Input data violates a container invariant (non-finite values, bad labels, ...)."""


class DomainError(FunBayesError):
    """A function was evaluated outside its mathematical domain."""


class NumericalError(FunBayesError):
    """A numerical routine failed to produce a usable result."""
