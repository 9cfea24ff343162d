"""Exception types raised by the numerical modules."""

from __future__ import annotations


class PPBError(Exception):
    """Base class for every error raised by ppbvortex."""


class InvalidSpec(PPBError, ValueError):
    """A pattern, window or configuration violates its preconditions."""


class UnsupportedDegree(PPBError, ValueError):
    """Polynomial degree outside the validated range."""


class DomainError(PPBError, ValueError):
    """Point outside the single-valued domain of a conformal map."""


class NumericalError(PPBError, ArithmeticError):
    """Base class for failures of an iterative numerical procedure."""


class ContourThroughNode(NumericalError):
    """A circulation contour keeps hitting a density zero after all retries."""


class NoConvergence(NumericalError):
    """Newton refinement did not reach the root tolerance.

    ``last_iterate`` holds the final position and ``residual`` the modulus of
    the field there.
    """

    def __init__(self, message: str, last_iterate=None, residual: float | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class SingularJacobian(NumericalError):
    """The Jacobian of (Re psi, Im psi) is singular at the iterate."""


class NoRootInInterval(NumericalError):
    """A bracketing root solver found no sign change."""


class NotApplicable(PPBError, ValueError):
    """The requested quantity does not exist for these parameters."""
