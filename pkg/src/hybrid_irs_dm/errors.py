"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Array shapes do not line up."""


class DomainError(ValueError):
    """An argument lies outside the range where the model is defined."""


class SymmetryError(ValueError):
    """A matrix expected to be Hermitian is not."""


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration cap without converging."""


class NumericError(ArithmeticError):
    """A quantity became non-finite."""


class ConfigError(ValueError):
    """A scenario or sweep configuration is invalid."""


class GridTooLargeError(ValueError):
    """A brute-force grid exceeds the size guard."""
