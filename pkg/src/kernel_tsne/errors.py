"""Exception types raised across the package."""


class KernelTSNEError(Exception):
    """Base class for all package errors."""


class ParameterError(KernelTSNEError, ValueError):
    """An argument is outside its valid range."""


class DimensionError(KernelTSNEError, ValueError):
    """Array shapes do not agree."""


class InputError(KernelTSNEError, ValueError):
    """Input data is malformed (non-finite values, mismatched rows, ...)."""


class DegenerateInputError(InputError):
    """Input is well formed but carries no usable structure."""


class FormatError(InputError):
    """A file could not be parsed."""


class UnsupportedKernelError(ParameterError):
    """The requested operation is not defined for this kernel."""


class DivergenceError(KernelTSNEError, ArithmeticError):
    """The optimizer produced non-finite or exploding coordinates."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"optimization diverged at iteration {iteration}")
