class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class NumericError(ArithmeticError):
    """Non-finite input or a numerical failure."""
