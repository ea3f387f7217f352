class FeasibilityError(RuntimeError):
    """Geometry constraints could not be met within the sampling budget."""


class DomainError(ValueError):
    pass


class UnmatchedError(KeyError):
    pass


class InstanceTooLarge(ValueError):
    pass


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ValidationError(ConfigError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
