"""Exception types shared across the package."""


class RenderSimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RenderSimError):
    """Bad scene kind, bad geometry, bad constants file."""


class ContractViolation(RenderSimError):
    """An operation was called outside its precondition."""


class CompileError(RenderSimError):
    """A pipeline cannot be lowered with the given assets."""
