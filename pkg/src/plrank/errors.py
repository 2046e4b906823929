"""Exception types shared across the toolkit."""


class PLRankError(Exception):
    """Base class for all toolkit errors."""


class ParseError(PLRankError):
    """Malformed input text (dataset lines, score files, model files)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(PLRankError):
    """Well-formed input that violates a documented constraint."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(PLRankError):
    """Training configuration that cannot be executed."""
