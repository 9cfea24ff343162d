"""Vortices of eigenfunctions of the two-dimensional parabolic potential barrier."""

from .errors import (ContourThroughNode, DomainError, InvalidSpec, NoConvergence,
                     NoRootInInterval, NotApplicable, NumericalError, PPBError,
                     SingularJacobian, UnsupportedDegree)
from .wavefield import (PhysicalParams, ComplexEnergy, SignPair, WaveTerm, WaveExpression,
                        hermite_pm, u1d, eigenvalue, evaluate, gradient)

__version__ = "0.1.0"
