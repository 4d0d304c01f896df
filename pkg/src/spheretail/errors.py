"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(ArithmeticError):
    """An iterative evaluation did not reach its accuracy target."""


class ConfigError(ValueError):
    """Invalid run configuration (bad grid, tolerance, coefficient list...)."""


class InternalError(RuntimeError):
    """A numerical invariant was violated beyond rounding level."""
