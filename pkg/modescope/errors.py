"""Exception and warning classes raised by modescope."""


class RankDeficiencyError(ValueError):
    """The snapshot matrix has fewer usable singular values than requested."""


class DecompositionError(RuntimeError):
    """The reduced eigenproblem could not be solved reliably.

    Attributes:
    condition -- Condition number of the reduced eigenvector matrix, or inf. Float.
    """

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (eigenvector condition: {condition:.3e})")
        self.condition = condition


class ModescopeWarning(UserWarning):
    """Base class for numerical caveats that do not stop a computation."""


class RegimeWarning(ModescopeWarning):
    """Snapshot matrix is wide (D*L <= N-L); residual scores only see truncation."""


class AmplitudeWarning(ModescopeWarning):
    """Mode matrix is rank deficient; amplitudes are the minimum-norm solution."""


class ScoreSentinelWarning(ModescopeWarning):
    """A per-mode score could not be evaluated and was set to the sentinel."""


class DegenerateSelectionWarning(ModescopeWarning):
    """All scores are identical; every mode was labeled true."""
