"""Exception types shared across the package."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A configuration value is missing, malformed, or inconsistent."""


class UnseenItemError(ValueError):
    """Recall was requested for an item that has never been presented."""


class TimeReversalError(ValueError):
    """A timestamp moved backwards relative to recorded history."""


class DegeneratePosteriorError(ArithmeticError):
    """A belief update left zero probability mass on every grid point."""


class ModeError(RuntimeError):
    """An operation was invoked on a belief bank in the wrong model mode."""
