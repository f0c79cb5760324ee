"""Exception hierarchy shared by the numerical modules and the CLI."""


class DipolePhaseError(Exception):
    """Base class for all package errors."""


class NonConvergence(DipolePhaseError):
    """An adaptive procedure exhausted its budget.

    The best available estimate is attached as ``result`` so callers can
    still report it (flagged as unconverged).
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NonFiniteSample(DipolePhaseError):
    """An integrand returned NaN/Inf or was sampled on a singular point."""


class SingularPoint(DipolePhaseError):
    """A field was requested at the location of its source charge."""


class OverlapViolation(DipolePhaseError):
    """The dipole (or a finite-difference stencil point) entered the slab."""


class OpenPathError(DipolePhaseError):
    """A closed loop was required but an open trajectory was supplied."""


class ConfigError(DipolePhaseError):
    """Invalid scenario configuration (file or command line)."""
