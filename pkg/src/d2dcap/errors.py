class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class DegenerateModeSelection(DomainError):
    """m_T == 0: the direct and D_T->eNB pathlosses coincide, so the test has no power."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry when known."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
