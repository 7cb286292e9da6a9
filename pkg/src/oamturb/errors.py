"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical self-check failed (convergence, calibration, sanity)."""


class ConvergenceError(NumericalError):
    """Quadrature doubling check failed.

    Carries both estimates so the caller can inspect how far apart the
    coarse and refined rules landed.
    """

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class CalibrationError(NumericalError):
    """A Monte Carlo calibration invariant failed (names the culprit)."""

    def __init__(self, message, band=None):
        super().__init__(message)
        self.band = band


class ConfigError(ValueError):
    """Invalid scenario configuration (unknown key, bad value, bad syntax)."""
