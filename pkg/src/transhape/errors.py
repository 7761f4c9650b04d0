"""Exception types shared across the package."""


class TranshapeError(Exception):
    """Base class for package-specific failures."""


class StepBudgetError(TranshapeError):
    """Integration exceeded the configured step budget (not a divergence)."""


class DivergedTrajectoryError(TranshapeError):
    """A metric was requested on a diverged trajectory."""

    def __init__(self, message, divergence_time=None):
        super().__init__(message)
        self.divergence_time = divergence_time


class PlantValidationError(TranshapeError, ValueError):
    """A plant failed its consistency checks (equilibrium, output, bounds)."""
