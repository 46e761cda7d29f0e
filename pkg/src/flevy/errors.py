"""Exception types shared across the package."""


class FlevyError(Exception):
    """Base class for all errors raised by flevy."""


class InvalidParameter(FlevyError, ValueError):
    """A numeric argument is outside its admissible range."""


class Unsupported(FlevyError, NotImplementedError):
    """The requested combination is valid in principle but not implemented."""


class InsufficientCoverage(FlevyError, ValueError):
    """The driver grid does not cover the times needed by a synthesis."""


class PreconditionViolation(FlevyError, ValueError):
    """A model does not satisfy the assumptions of a bound or estimator."""
