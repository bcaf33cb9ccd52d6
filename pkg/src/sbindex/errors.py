"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 1 usage, 2 data/schema,
3 numerical failure.
"""


class SbIndexError(Exception):
    exit_code = 2


class SchemaError(SbIndexError):
    """Input does not match the expected file layout."""


class InsufficientDataError(SbIndexError):
    """Too few points to carry out a fit."""


class EmptyRunError(SbIndexError):
    """None of the requested years are present in the dataset."""


class ConfigurationError(SbIndexError, ValueError):
    exit_code = 1


class NumericalError(SbIndexError):
    exit_code = 3


class SingularFitError(NumericalError):
    """Regression design matrix is rank deficient."""


class DivergentTailError(NumericalError):
    """Non-positive tail exponent, so no finite extrapolation cutoff exists."""


class ConvergenceError(NumericalError):
    """Quadrature did not reach the requested tolerance."""
