"""Exception types shared across the package."""


class KContactError(Exception):
    """Base class for numerical/structural failures."""


class NotRegularError(KContactError):
    """The velocity Hessian is singular where regularity is required."""


class NewtonError(KContactError):
    """Newton iteration failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SimulationError(KContactError):
    """Time integration could not proceed (CFL violation, blow-up, ...)."""


class ConfigError(KContactError):
    """Invalid run configuration (unknown model, bad parameters, ...)."""
