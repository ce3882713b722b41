"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class FxSmileError(Exception):
    """Base class for all library errors."""


class InputError(FxSmileError, ValueError):
    """Malformed input or violated precondition."""


class NumericalError(FxSmileError, ArithmeticError):
    """A numerical procedure could not produce a meaningful answer."""

    tag = "numerical"


class NonPositiveVol(NumericalError):
    tag = "NonPositiveVol"

    def __init__(self, message: str, leg: str | None = None):
        super().__init__(message)
        self.leg = leg


class Unreachable(NumericalError):
    """No strike attains the requested delta; ``delta_max`` is the best attainable."""

    tag = "Unreachable"

    def __init__(self, target: float, delta_max: float, leg: str | None = None):
        where = f" ({leg})" if leg else ""
        super().__init__(f"delta {target:+.6g} unreachable{where}; attainable extreme is {delta_max:+.6g}")
        self.target = target
        self.delta_max = delta_max
        self.leg = leg


class NoRoot(NumericalError):
    tag = "NoRoot"


class ConvergenceError(NumericalError):
    tag = "NoConvergence"
