class UsageError(ValueError):
    """Invalid arguments: dimension mismatch, violated preconditions, size caps."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value where a finite one is required."""
