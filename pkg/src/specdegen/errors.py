"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`SpecDegenError`, so callers (and the CLI) can map families of
failures to exit codes.
"""

from __future__ import annotations


class SpecDegenError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpecDegenError, ValueError):
    """Invalid parameters or an unsatisfiable configuration."""


class ResolutionError(SpecDegenError, ValueError):
    """A sequence window does not fit on the frequency grid."""


class KernelOverflowError(SpecDegenError, ArithmeticError):
    """Kernel taps cannot be represented reliably in double precision.

    Parameters
    ----------
    message : str
        Human readable diagnostic.
    log10_norm : float
        Log-domain estimate of ``log10 sup |h_n(k)|``, available even when
        the linear taps are not.
    """

    def __init__(self, message: str, log10_norm: float = float("nan")):
        super().__init__(message)
        self.log10_norm = log10_norm


class BraidConsistencyError(SpecDegenError, ValueError):
    """Phase sequences disagree where the braid requires them to agree."""


class SpanError(SpecDegenError, ValueError):
    """Observations do not cover the support a kernel needs.

    Parameters
    ----------
    message : str
        Human readable diagnostic.
    required : int
        Minimal number of lattice observations needed on the relevant side.
    """

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required
