"""Exception types shared across the package."""

import numpy as np


class NotPSDError(ValueError):
    """A covariance matrix failed to factor even after diagonal jitter.

    ``witness`` is a unit vector ``v`` with ``v @ M @ v < 0``.
    """

    def __init__(self, message, witness=None, quad_form=None):
        super().__init__(message)
        self.witness = None if witness is None else np.asarray(witness, dtype=float)
        self.quad_form = quad_form


class DivergenceError(ArithmeticError):
    """An infinite series could not be truncated below the requested tolerance."""


class InadmissibleError(ValueError):
    """The row covariance violates the admissibility condition a bound needs."""

    def __init__(self, message, condition, margin):
        super().__init__(message)
        self.condition = condition
        self.margin = margin


class BoundVacuousError(ValueError):
    """The tensor bound is trivial because the s-power sum vanishes."""


class NotDiagonallyDominantError(ValueError):
    """The Varah inverse bound does not apply (gap <= 0)."""

    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap


class ResourceBudgetError(RuntimeError):
    """The requested exact computation exceeds the configured work budget."""
