class ConfigurationError(ValueError):
    """Raised when a component is built with invalid settings."""


class UsageError(ValueError):
    """Raised when a call violates an operation's preconditions."""
