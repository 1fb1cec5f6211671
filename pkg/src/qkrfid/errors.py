"""Exception classes shared across the package.

Two families matter for callers: configuration/parameter problems
(:class:`ParameterError`) and numerical guards that fire during a run
(:class:`NumericalGuardError` and subclasses).  The command line maps the
first family to exit code 2 and the second to exit code 3.
"""


class QkrError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(QkrError, ValueError):
    """Invalid physical parameters or run configuration."""


class NumericalGuardError(QkrError, RuntimeError):
    """A numerical safety check tripped during a computation."""


class BasisOverflowError(NumericalGuardError):
    """Momentum-basis edge population exceeded the configured threshold.

    Raised instead of silently truncating a state that spread beyond the
    momentum window; enlarge the basis or reduce the kick count.
    """


class BracketRootError(NumericalGuardError):
    """No root bracket exists for the rotational quantization condition.

    Typically means the requested level sits inside, or too close to, the
    resonance island where rotational quantization does not apply.
    """


class WindowTooSmallError(NumericalGuardError):
    """Eigenvector tails reach the boundary of the truncated basis window."""
