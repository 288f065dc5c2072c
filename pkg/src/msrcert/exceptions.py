"""Custom exceptions for msrcert.

Every class carries the process exit code the CLI returns when it escapes a run.
"""

from typing import Optional


class MsrCertError(Exception):
    """Base exception for msrcert operations."""
    exit_code: int = 1


class ConfigError(MsrCertError):
    """Raised when a run configuration is invalid."""
    exit_code = 2


class InputFileError(MsrCertError):
    """Raised when an input file is missing or unreadable."""
    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path


class ParseError(MsrCertError):
    """Raised when an input file does not follow its format."""
    exit_code = 4

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line

    @classmethod
    def from_decode_error(cls, path, error: UnicodeDecodeError) -> "ParseError":
        """A ParseError naming the line of the first byte that is not UTF-8."""
        line = error.object.count(b"\n", 0, error.start) + 1
        return cls(f"not valid UTF-8 (byte {error.object[error.start]:#04x})", path=str(path), line=line)


class VocabularyError(MsrCertError):
    """Raised on unknown or duplicate tokens."""
    exit_code = 4


class ModelValidationError(MsrCertError):
    """Raised when a weight manifest describes an invalid network."""
    exit_code = 4


class CompositionError(ModelValidationError):
    """Raised when consecutive layers have incompatible shapes."""

    def __init__(self, message: str, first: str, second: str):
        super().__init__(message)
        self.first = first
        self.second = second


class PropagationError(MsrCertError):
    """Raised when bounds cannot be propagated through a network."""
    exit_code = 5


class TrainingError(MsrCertError):
    """Raised when a fixture model misses its accuracy target."""
    exit_code = 6

    def __init__(self, message: str, accuracy: float):
        super().__init__(message)
        self.accuracy = accuracy


class AttackError(MsrCertError):
    """Raised when a substitution search is given an unusable neighborhood."""
    exit_code = 7
