class ParameterError(ValueError):
    """Invalid argument, shape or file content."""


class NoAdmissibleFrequency(ArithmeticError):
    """Every frequency has a zero (unobservable) denominator."""
