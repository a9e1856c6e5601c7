"""Exception types shared across the package."""


class MemdiffError(Exception):
    """Base class for all package-specific errors."""


class ScenarioError(MemdiffError):
    """Unknown scenario name or inconsistent scenario data."""


class QuadratureError(MemdiffError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class WindowExhaustedError(MemdiffError):
    """A membrane lookup left the configured spatial range."""


class SmallnessError(MemdiffError):
    """The interface spacing is too large for the scenario's skewness."""


class NonConvergenceError(MemdiffError):
    """An iterative solver (Newton inverse) failed to converge."""


class HorizonExhaustedError(MemdiffError):
    """A strip excursion ran far beyond its expected duration.

    Exit times have exponential tails on the diffusive scale, so hitting
    this guard indicates a scheme or scenario bug, not bad luck.
    """


class ResolutionWarning(UserWarning):
    """A path is too coarse for the requested estimator bandwidth."""
