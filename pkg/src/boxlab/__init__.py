"""Box seminorms, finitary inverse theorems and corner experiments on finite systems."""

__version__ = "0.1.0"

from .errors import BoxLabError, BudgetError, NegativityError, NoSolution, PrecisionError, ValidationError

__all__ = [
    "__version__",
    "BoxLabError",
    "BudgetError",
    "NegativityError",
    "NoSolution",
    "PrecisionError",
    "ValidationError",
]
