#!/usr/bin/env python3
"""
Exception types raised across the homogenization lab
"""

from typing import Optional


class HomogenizationError(Exception):
    """Base class for every error raised by the lab"""


# Input / data errors

class InvalidGrid(HomogenizationError, ValueError):
    """Torus grid violates its invariants (dimension, power-of-two size, memory budget)"""


class NonFiniteField(HomogenizationError, ValueError):
    """Sampled field contains NaN or infinite entries"""


class GridMismatch(HomogenizationError, ValueError):
    """Fields or space-time data live on different grids"""


class NonZeroMean(HomogenizationError, ValueError):
    """Cell field expected to average to zero does not"""


class NotDivergenceFree(HomogenizationError, ValueError):
    """Cell vector field expected to be divergence free is not"""


class NotSymmetric(HomogenizationError, ValueError):
    """Matrix field expected to be symmetric is not"""


class InvalidCoefficients(HomogenizationError, ValueError):
    """Coefficient record violates a normalization or consistency requirement"""


class NotElliptic(HomogenizationError, ValueError):
    """Matrix field loses ellipticity at some node"""


class SignChange(HomogenizationError, ValueError):
    """Eigenfunction changes sign beyond tolerance"""


class InvalidDomain(HomogenizationError, ValueError):
    """Space-time discretization violates its invariants"""


class StiffnessCap(HomogenizationError, ValueError):
    """Scale parameter below the threshold accepted by the direct oscillatory solver"""


class KernelUnderresolved(HomogenizationError, ValueError):
    """Smoothing kernel support spans too few grid cells"""


class EpsilonTooLarge(HomogenizationError, ValueError):
    """Cut-off layers do not fit inside the domain"""


class DegenerateErrors(HomogenizationError, ValueError):
    """Rate fit requested on vanishing or constant errors"""


# Solver errors

class NoConvergence(HomogenizationError, RuntimeError):
    """Iteration cap reached before the tolerance"""


class NonPositiveEigenfunction(HomogenizationError, RuntimeError):
    """Converged principal eigenfunction is not positive (grid too coarse)"""


class SolverFailure(HomogenizationError, RuntimeError):
    """Linear solve or factorization failed"""


class NonFiniteState(HomogenizationError, RuntimeError):
    """Time stepping produced NaN or infinite values"""


class SweepLevelError(HomogenizationError, RuntimeError):
    """Error raised while processing one level of an epsilon sweep"""

    def __init__(self, epsilon: float, message: str):
        super().__init__(f"epsilon={epsilon:g}: {message}")
        self.epsilon = epsilon


class ReportWriteError(HomogenizationError, OSError):
    """Report or snapshot file could not be written"""

    def __init__(self, path, message: Optional[str] = None):
        super().__init__(f"cannot write {path}: {message}")
        self.path = str(path)
