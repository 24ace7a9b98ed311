"""Structured exceptions shared across the package."""

from __future__ import annotations


class CvpError(Exception):
    """Base class for all errors raised by cvplab."""


class DimensionMismatchError(CvpError):
    """Operands live on manifolds or index sets of different dimension."""


class UnsupportedOrderError(CvpError):
    """A derivative order that is not implemented for the kernel family."""


class InfeasibleProjectionError(CvpError):
    """The volume/floor constraint set is empty."""


class NonFiniteIterateError(CvpError):
    """The optimizer produced a non-finite action or gradient."""

    def __init__(self, message: str, iteration: int, points=None, weights=None):
        super().__init__(message)
        self.iteration = iteration
        self.points = points
        self.weights = weights


class WeightPositivityError(CvpError):
    """A deformation drove some weight to zero or below."""

    def __init__(self, message: str, point_index: int):
        super().__init__(message)
        self.point_index = point_index


class NegativeDiagonalError(CvpError):
    """A per-point quadratic-form diagonal is significantly negative."""


class SchemaError(CvpError):
    """A config or state file does not match the expected schema."""
