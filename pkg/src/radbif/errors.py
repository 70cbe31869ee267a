"""Exception types shared across the toolkit.

ConfigError maps to CLI exit code 2, NumericalError and its subclasses to
exit code 1.  Plain ValueError is used for API-level domain errors such as
evaluating a nonlinearity at a negative argument.
"""


class ToolkitError(Exception):
    """Base class for all toolkit-specific failures."""


class ConfigError(ToolkitError, ValueError):
    """Invalid configuration values, parameters, or input files."""


class NumericalError(ToolkitError, RuntimeError):
    """A numerical procedure failed to produce a usable result."""


class NonConvergenceError(NumericalError):
    """An iteration exceeded its budget; carries the residual trace."""

    def __init__(self, message, trace=None, last_state=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
        self.last_state = last_state


class EstimationFailedError(NumericalError):
    """A numeric limit estimate did not settle; carries the sample table."""

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples


class CollapsedToZeroError(NumericalError):
    """A nonlinear solve converged to the trivial state."""


class StepOffError(NumericalError):
    """Could not leave the trivial branch at the bifurcation point."""


class ContinuationError(NumericalError):
    """Branch tracing failed; carries the last good point if any."""

    def __init__(self, message, last_point=None):
        super().__init__(message)
        self.last_point = last_point


class SubsolutionError(NumericalError):
    """No admissible subsolution amplitude was found."""


class MonotonicityViolationError(NumericalError):
    """A monotone iteration produced a decreasing or ceiling-breaking step."""


class DistinctnessError(NumericalError):
    """Two allegedly distinct solutions coincide."""


class InsufficientDataError(NumericalError):
    """Not enough points in the requested regime for a fit or a check."""
