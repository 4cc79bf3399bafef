"""Exception types. Every error carries a machine-readable ``code``."""


class ModelError(ValueError):
    """Base class for all toolkit errors."""

    code = "MODEL_ERROR"

    def __init__(self, message: str, key=None):
        super().__init__(f"{self.code}: {message}")
        self.key = key


class MissingEvent(ModelError):
    code = "MISSING_EVENT"


class MissingFit(ModelError):
    code = "MISSING_FIT"


class MissingSamples(ModelError):
    code = "MISSING_SAMPLES"


class DegenerateSamples(ModelError):
    code = "DEGENERATE_SAMPLES"


class EmptyRobustWindow(ModelError):
    code = "EMPTY_ROBUST_WINDOW"


class InfeasibleTripTime(ModelError):
    code = "INFEASIBLE_TRIP_TIME"
