"""Exception hierarchy. The CLI maps these onto exit codes."""


class WedgeHeatError(Exception):
    """Base class for all library errors."""


class DegenerateMetricError(WedgeHeatError, ValueError):
    """Metric components are not symmetric positive definite."""


class ResolutionError(WedgeHeatError, ValueError):
    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class InvariantOrderError(WedgeHeatError, NotImplementedError):
    """Heat invariant u_j requested for j >= 3."""


class SpectrumUnavailableError(WedgeHeatError, ValueError):
    pass


class CutoffError(WedgeHeatError, ValueError):
    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class FitRefusedError(WedgeHeatError):
    """Least-squares fit was refused because the design is too ill-conditioned."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class VerificationError(WedgeHeatError):
    """A closed-form formula disagreed with its independent oracle."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class ConfigError(WedgeHeatError, ValueError):
    def __init__(self, message, key_path=""):
        super().__init__(message)
        self.key_path = key_path
