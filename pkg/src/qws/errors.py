"""Exception types shared across the package."""


class QwsError(Exception):
    """Base class for all errors raised by qws."""


class EnvelopeError(QwsError):
    """Special-function argument outside the supported (order, argument) envelope."""


class RegularityError(QwsError):
    """Regular/irregular fundamental solutions cannot be separated (Re lambda <= 0)."""


class StiffnessError(QwsError):
    """Adaptive step size underflowed; the equation is too stiff for the integrator."""


class GridMismatchError(QwsError):
    """Two solutions do not live on the same radial grid or equation parameters."""


class DegenerateCouplingError(QwsError):
    """det(Id - mu*C*M) below threshold: kernel resonance at this energy."""


class NodeAtCutoffError(QwsError):
    """The radial solution has a node at the cutoff radius; the log-derivative is undefined."""


class NearThresholdResonanceError(QwsError):
    """Low-momentum phase formula denominator vanishes (leading terms cancel)."""


class AmbiguousCrossingError(QwsError):
    """Log-derivative grazes the threshold value without a clean sign change."""


class InvalidDifferencingError(QwsError):
    """A node crossed the cutoff radius inside the finite-difference stencil."""


class ConfigError(QwsError):
    """Experiment configuration failed to parse or validate."""
