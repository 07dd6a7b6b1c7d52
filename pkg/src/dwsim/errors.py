"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


class DegenerateInputError(ParameterError):
    """Input is well-formed but carries no information (zero variance, zero reference)."""


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` names the offending dotted key."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
