class DepinLabError(Exception):
    """Base class for all errors raised by depinlab."""


class ConfigError(DepinLabError, ValueError):
    """Invalid parameters or configuration."""


class NumericalError(DepinLabError, ArithmeticError):
    """Non-finite state, symmetry violation or divergent iteration."""


class InconclusiveRunError(DepinLabError):
    """A run neither got stuck nor travelled within its step budget."""

    def __init__(self, message, F=None, steps=None):
        super().__init__(message)
        self.F = F
        self.steps = steps


class PinnedError(DepinLabError):
    """The requested quantity does not exist because the interface is pinned."""
