"""Exception types raised across the package."""


class GraphPotError(Exception):
    """Base class for all errors raised by this package."""


class GraphFormatError(GraphPotError):
    """Malformed graph/measure/potential/packing input."""


class GraphStructureError(GraphPotError):
    """Structural violation: asymmetry, self-loop, non-positive weight, disconnectedness."""


class GraphSizeError(GraphPotError):
    """A generator would exceed the configured vertex cap."""


class SolverError(GraphPotError):
    """A linear solve did not reach the requested residual."""


class MetricError(GraphPotError):
    """Violated metric contract (triangle inequality, size cap, missing vertex)."""


class ContractionError(GraphPotError):
    """Invalid contraction parameters (bad clamp bounds, non-Lipschitz table)."""


class FlowError(GraphPotError):
    """Flow certificate rejected: conservation violation, zero flux, or no route."""


class TreeError(GraphPotError):
    """An operation requiring a tree received a graph with cycles."""


class PackingError(GraphPotError):
    """Invalid circle packing or packing-derived object."""


class LipschitzError(GraphPotError):
    """Boundary anchor values inconsistent with the declared Lipschitz constant."""


class StabilizationError(GraphPotError):
    """A truncation-limit procedure did not stabilize; carries the evidence report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
