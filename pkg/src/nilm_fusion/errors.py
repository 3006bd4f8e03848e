"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid arguments / bad configuration
exit with 2, data and file-format problems with 3, numeric failures with 4.
"""


class NilmFusionError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(NilmFusionError, ValueError):
    """A caller-supplied value violates an operation's precondition."""


class UnsupportedError(NilmFusionError):
    """The request is valid but deliberately out of scope (e.g. upsampling)."""


class DataFormatError(NilmFusionError):
    """On-disk data could not be parsed or is inconsistent."""


class NumericError(NilmFusionError):
    """A numeric procedure failed (non-convergence, non-finite values)."""


class InvalidStateError(NilmFusionError):
    """An operation was called with stale or mismatched internal state."""
