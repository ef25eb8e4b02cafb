"""Exception types shared across the package."""

from __future__ import annotations


class GeometryError(Exception):
    """Base class for geometric computation failures."""


class JetOrderError(GeometryError):
    """Requested jet/derivative order is unsupported or insufficient."""


class ChartDomainError(GeometryError):
    """Point lies outside the validity ball of its chart."""


class DegenerateMetricError(GeometryError):
    """Metric not positive definite (or numerically singular) at a point."""


class DegeneratePlaneError(GeometryError):
    """Sectional curvature requested for (numerically) parallel vectors."""


class FrameError(GeometryError):
    """Frame construction or adaptation failure."""


class NotEinsteinError(GeometryError):
    """Model failed an Einstein-constant test."""

    def __init__(self, deviation: float, point=None):
        self.deviation = float(deviation)
        self.point = point
        super().__init__(f"Ricci deviates from Einstein by {deviation:.3e}"
                         + (f" at point {point}" if point is not None else ""))


class ConstantHError(GeometryError):
    """Holomorphic sectional curvature is constant on fibers (space form)."""


class NotNormalizedError(GeometryError):
    """Model is not normalized to max |sec| = 1."""


class FlatModelError(GeometryError):
    """Operation undefined on a flat model."""


class DegenerateRatioError(GeometryError):
    """Average-to-maximum ratio undefined (fiber maximum is zero)."""


class ModelSpecError(GeometryError):
    """Invalid model specification."""


class ConvergenceError(GeometryError):
    """Iterative optimization failed to converge within its cap."""
