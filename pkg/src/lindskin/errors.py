"""Exception hierarchy.

Numerical failures share the :class:`NumericalError` base so the command line
front end can map them onto a single exit status.
"""


class LindskinError(Exception):
    """Base class for all library errors."""


class ModelError(LindskinError, ValueError):
    """Invalid model input (shape mismatch, non-Hermitian hopping, negative rate)."""


class CapacityError(LindskinError):
    """Requested size exceeds a documented memory cap."""


class NumericalError(LindskinError):
    """A well-posed request that failed for numerical reasons."""


class EigensolverError(NumericalError):
    pass


class GapClosedError(NumericalError):
    def __init__(self, margin, e_ref=None):
        self.margin = margin
        self.e_ref = e_ref
        super().__init__(f"reference energy on spectrum (gap margin {margin:.3e})")


class GridTooCoarseError(NumericalError):
    def __init__(self, k_grid, detail=""):
        self.k_grid = k_grid
        msg = f"grid too coarse (k_grid={k_grid})"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class ResonanceError(NumericalError):
    """Two rapidities sum to (numerically) zero: a stationary-mode resonance."""

    def __init__(self, value):
        self.value = value
        super().__init__(f"stationary-mode resonance: |lambda_a + lambda_b| = {value:.3e}")


class ConditioningError(NumericalError):
    pass


class SteadyStateDegeneracyError(NumericalError):
    def __init__(self, multiplicity):
        self.multiplicity = multiplicity
        super().__init__(f"steady state is not unique (null-space multiplicity {multiplicity})")


class IntegrationError(NumericalError):
    pass
