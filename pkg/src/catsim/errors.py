"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes, so new error conditions
should subclass one of the categories below rather than raising bare
ValueError from deep inside a solver.
"""


class CatsimError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(CatsimError):
    """Invalid or mismatched Hilbert-space dimensions."""


class TruncationError(CatsimError):
    """A Fock truncation is too small for the requested amplitude.

    Carries the minimum dimension that would satisfy the guard.
    """

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


class StepSizeError(CatsimError):
    """Integrator trace drift exceeded its bound; a smaller dt is needed."""


class DivergenceError(CatsimError):
    """Integrator produced non-finite entries."""


class FitError(CatsimError):
    """A nonlinear fit failed to converge or found no usable structure."""


class ScenarioError(CatsimError):
    """A scenario file failed schema or consistency validation."""
