class DomainError(ValueError):
    """Raised when an argument falls outside the domain an operation accepts."""


class ScenarioError(ValueError):
    """Configuration problem; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)
