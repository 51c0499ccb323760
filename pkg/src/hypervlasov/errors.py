"""Exception types raised by the solvers and diagnostics."""


class DomainError(ValueError):
    """An argument lies outside the domain of a kinematic map."""


class ConfigurationError(ValueError):
    """Grid, window or scenario settings are inconsistent."""


class WindowError(ValueError):
    """A marker or probe left the computational window."""


class NeutralityError(ValueError):
    """The total hyperboloidal charge does not cancel against the background."""


class NonFiniteError(FloatingPointError):
    """A NaN or infinity appeared in fields or marker data."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class HistoryError(ValueError):
    """A stored solution history does not cover a requested evaluation."""


class AdmissibilityError(ValueError):
    """Initial or boundary data violate a hard admissibility condition."""
