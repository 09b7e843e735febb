"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid argument: bad sizes, out-of-range indices, mismatched objects."""


class CoercivityError(ParameterError):
    """Robin coefficient is not bounded below by a positive constant."""


class NumericalError(RuntimeError):
    """A linear solve or eigen computation failed to converge."""
