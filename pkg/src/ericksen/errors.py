"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Scenario, boundary or config-file problem detected before solving."""


class AssemblyError(RuntimeError):
    """Finite element assembly failed (e.g. a degenerate cell)."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class ConvergenceError(RuntimeError):
    """Iterative solver hit its iteration limit."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class IndefiniteError(RuntimeError):
    """Conjugate gradients met a direction of non-positive curvature."""


class FlowError(RuntimeError):
    """A gradient-flow step failed; ``records`` holds the partial trajectory."""

    def __init__(self, message, records=(), state=None):
        super().__init__(message)
        self.records = list(records)
        self.state = state
