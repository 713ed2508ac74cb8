"""Shared exception types."""


class ConfigError(Exception):
    """Invalid run configuration, config file, or CLI flag combination."""


class DataError(Exception):
    """Malformed, truncated, or inconsistent dataset files."""


class NonFiniteLossError(ArithmeticError):
    """A loss or gradient evaluation produced inf or nan.

    ``sample_index`` points at the first offending sample when the problem
    can report per-sample losses, otherwise it is None.
    """

    def __init__(self, message: str, sample_index: int | None = None):
        super().__init__(message)
        self.sample_index = sample_index


class NotADescentDirectionError(ValueError):
    """The directional derivative at the search origin is non-negative."""


class DegenerateAbscissaeError(ValueError):
    """Two derivative observations share the same step size."""


class ZeroSlopeError(ValueError):
    """The fitted derivative model has zero slope and therefore no root."""


class BudgetExhaustedError(RuntimeError):
    """The oracle refused an evaluation that would exceed its budget."""


class IncompleteTableError(ValueError):
    """An accuracy cell required by the robustness metric is missing."""
