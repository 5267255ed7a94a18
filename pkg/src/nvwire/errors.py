"""Exception hierarchy shared by the numerical and I/O layers."""


class NVWireError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputValidationError(NVWireError, ValueError):
    """A physical parameter or argument violates its documented domain."""

    exit_code = 2


class RangeError(NVWireError, ArithmeticError):
    """A special-function value overflowed or underflowed."""

    exit_code = 3


class NoRootError(NVWireError):
    """The argument-principle count found no zero inside the search region."""

    exit_code = 3


class MultipleRootsError(NVWireError):
    """More than one zero inside the search region; shrink it and retry."""

    exit_code = 3

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class NoModeError(NVWireError):
    """No guided plasmon exists for the requested geometry."""

    exit_code = 3


class AccuracyError(NVWireError):
    """A truncated sum or integral missed its convergence target.

    ``best_estimate`` and ``error_estimate`` carry whatever the routine
    managed to compute, so callers can decide whether it is usable.
    """

    exit_code = 3

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class ChannelSplitError(AccuracyError):
    """A decay channel came out negative beyond the numerical floor.

    The total rate is unaffected and is given as ``best_estimate``;
    ``channels`` holds the unclamped split.
    """

    def __init__(self, message, best_estimate=None, channels=None):
        super().__init__(message, best_estimate)
        self.channels = channels or {}


class ConvergenceError(NVWireError):
    """An iterative fit did not converge."""

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InsufficientDataError(NVWireError, ValueError):
    """Too few data points to run the requested fit."""

    exit_code = 3


class EmptyStreamError(NVWireError, ValueError):
    """A time-tag stream has no events usable for histogramming."""

    exit_code = 3


class FileFormatError(NVWireError):
    """An input file could not be parsed.  ``line`` is 1-based."""

    exit_code = 4

    def __init__(self, message, path=None, line=None):
        if line is not None:
            message = f"{path or '<input>'}:{line}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line
