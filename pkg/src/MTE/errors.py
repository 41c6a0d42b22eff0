"""Exceptions raised by numerical routines.

Domain validation (bad eccentricity, shooting parameter outside
(-1, 1), ...) raises the builtin ``ValueError``. Everything below
``NumericalError`` signals that a well-posed computation did not
succeed, and maps to exit code 1 on the command line.
"""


class NumericalError(RuntimeError):
    """Base class for failed numerical computations."""


class SingularBoundaryError(NumericalError):
    """Profile derivative requested inside the guard band near L_a."""


class IntegrationError(NumericalError):
    """Geodesic integration failed or did not reach the requested
    crossing."""


class ConservationDriftError(IntegrationError):
    """A first integral drifted beyond the allowed tolerance."""


class NoSignChangeError(NumericalError, ValueError):
    """Root bracket endpoints do not have opposite signs."""


class ContinuationError(NumericalError):
    """Branch continuation could not proceed."""
