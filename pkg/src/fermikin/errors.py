"""Exception hierarchy shared by the kinetic solvers, the oracle and the CLI."""


class FermikinError(Exception):
    """Base class for all package errors."""


class GridError(FermikinError, ValueError):
    """Invalid grid parameters."""


class AdmissibilityError(FermikinError, ValueError):
    """A Wigner function violates 0 <= W <= 1 beyond tolerance."""


class PotentialError(FermikinError, ValueError):
    """Invalid pair potential (e.g. constant in k)."""


class FitError(FermikinError):
    """Fermi-Dirac fit did not converge."""


class InfeasibleTargetError(FitError, ValueError):
    """Conserved-quantity target lies outside the admissible region."""


class BoundaryTargetError(FitError, ValueError):
    """Target lies on the boundary of the admissible region (beta = +-inf)."""

    def __init__(self, message, side):
        super().__init__(message)
        self.side = side


class StepFailure(FermikinError):
    """Time step could not be made admissible after the allowed halvings."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class TranslationInvarianceError(FermikinError, ValueError):
    """Many-body state is not translation invariant."""

    def __init__(self, message, violation):
        super().__init__(message)
        self.violation = violation


class ConfigError(FermikinError, ValueError):
    """Invalid run configuration."""
