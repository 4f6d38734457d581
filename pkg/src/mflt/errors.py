"""Shared exception types.

The CLI maps these onto distinct exit codes: plain ``ValueError`` (bad
arguments, inconsistent inputs) exits 2, ``CapError``/``BudgetError``
(a documented size or work cap was exceeded) exits 3.
"""


class CapError(ValueError):
    """An input exceeds a documented enumeration or size cap."""


class BudgetError(CapError):
    """A work budget was exhausted before reaching the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DivergenceError(ValueError):
    """A generating function was evaluated at a point where it diverges."""
