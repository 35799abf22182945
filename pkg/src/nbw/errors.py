"""Exception types shared across the package.

Configuration problems (bad layouts, unparsable files, invalid
hyperparameters) are distinct from numeric blow-ups during training so the
command line can map them to different exit codes.
"""

from __future__ import annotations


class NbwError(Exception):
    """Base class for all package errors."""


class ConfigError(NbwError):
    """Invalid configuration, layout, shapes, or hyperparameters."""


class ParseError(ConfigError):
    """A file could not be parsed; message names the offending location."""


class NumericError(NbwError):
    """A linear-algebra step failed beyond recoverable conditioning."""


class DivergenceSignal(NbwError):
    """Training or evaluation produced a non-finite / overflowing quantity.

    Carries the offending magnitude so callers can report how far the
    exponentials ran away instead of crashing on an overflow warning.
    """

    def __init__(self, message: str, magnitude: float = float("nan")):
        super().__init__(message)
        self.magnitude = magnitude
