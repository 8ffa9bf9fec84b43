"""Exception types raised across the package."""


class RegimeBenchError(Exception):
    """Base class for all package errors."""


class ParseError(RegimeBenchError):
    """Raw input text could not be parsed; message names the offending row."""


class ValidationError(RegimeBenchError):
    """An input violates a documented precondition or invariant."""


class DegenerateModelError(RegimeBenchError):
    """The smoother hit a zero predicted probability with nonzero mass."""

    def __init__(self, t: int, j: int):
        self.t = t
        self.j = j
        super().__init__(
            f"degenerate model: predicted probability is exactly 0 at t={t}, regime={j} "
            f"while the smoothed numerator is nonzero"
        )


class RegimeCollapseError(RegimeBenchError):
    """A regime's total posterior weight fell below the collapse threshold.

    Signals that the current EM restart should be abandoned; never fatal at
    the fit level unless every restart collapses.
    """

    def __init__(self, regime: int, weight: float):
        self.regime = regime
        self.weight = weight
        super().__init__(f"regime {regime} collapsed (total weight {weight:.3e})")


class FitFailureError(RegimeBenchError):
    """Every EM restart collapsed; carries the per-restart statistics."""

    def __init__(self, message: str, restart_stats):
        self.restart_stats = restart_stats
        super().__init__(message)


class SelectionFailureError(RegimeBenchError):
    """No candidate regime count satisfied the selection constraints."""

    def __init__(self, message: str, per_k):
        self.per_k = per_k
        super().__init__(message)


class NumericalError(RegimeBenchError):
    """A numerical routine failed (e.g. singular regression matrix)."""


class SigmaTieWarning(UserWarning):
    """Two regimes have indistinguishable emission scales; ordering tie-broken
    by original index."""
