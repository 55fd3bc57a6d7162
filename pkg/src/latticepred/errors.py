"""Exception hierarchy.

Validation problems subclass :class:`ValueError`; numerical breakdowns
(singular systems, poles, runaway exponents) subclass :class:`ArithmeticError`
so the CLI can map them to distinct exit codes.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(ArithmeticError):
    """Estimation broke down numerically."""


class SingularFitError(NumericalError):
    """Normal equations of a least-squares fit are singular."""


class PoleError(NumericalError):
    """Autoregressive spectrum has a zero denominator."""


class OverflowCapError(NumericalError):
    """Cepstral exponent exceeded the configured magnitude cap."""


class SymmetryError(NumericalError):
    """Transfer grid is not Hermitian to working precision."""
