"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 2); numerical
breakdowns derive from :class:`NumericalError` (CLI exit code 3).
"""


class BayesCointError(Exception):
    """Base class for all package errors."""


class InputError(BayesCointError, ValueError):
    """Invalid series, parameters or configuration."""


class NumericalError(BayesCointError, ArithmeticError):
    """A computation could not be completed to the required accuracy."""


class DegenerateRegressorError(InputError):
    """The regressor x has zero variance, so (alpha, beta) is not identified."""


class DegenerateResidualsError(NumericalError):
    """Residuals are all zero (or their lag sums vanish); sigma2 would be 0."""


class InvalidPhiError(InputError):
    """phi outside the admissible range for the requested prior."""


class ZeroVarianceError(NumericalError):
    """A variance estimate evaluated to zero."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach its tolerance at maximum refinement."""
