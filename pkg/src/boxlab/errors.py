"""Exception hierarchy shared by every module.

The CLI maps ``ValidationError`` to exit code 2 and ``BudgetError`` /
``PrecisionError`` to exit code 3.
"""


class BoxLabError(Exception):
    pass


class ValidationError(BoxLabError, ValueError):
    """Malformed input or a violated construction invariant."""


class NoSolution(ValidationError):
    """A congruence has no solution (polynomial not intersective at the modulus)."""


class NegativityError(BoxLabError, ArithmeticError):
    """A provably nonnegative accumulation came out below -1e-9."""


class BudgetError(BoxLabError):
    """Requested computation exceeds the configured cost budget."""


class PrecisionError(BoxLabError, ArithmeticError):
    """Input lies outside the range where results are certified."""
