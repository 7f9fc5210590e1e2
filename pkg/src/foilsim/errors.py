"""Exception types shared across the package."""


class FoilsimError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FoilsimError):
    """Raised when a vehicle configuration fails to parse or validate."""


class MissionError(FoilsimError):
    """Raised when a mission script fails to parse or validate."""


class SingularAllocationError(FoilsimError):
    """Raised when the wrench allocation matrix is not invertible (d_f <= 0)."""


class SimulationHalt(FoilsimError):
    """Raised when the integrator produces a non-finite derivative.

    Carries the last healthy state so callers can dump diagnostics.
    """

    def __init__(self, message: str, t: float, state_dump: dict):
        super().__init__(message)
        self.t = t
        self.state_dump = state_dump
