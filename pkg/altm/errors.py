"""
Exception hierarchy shared by every package in the project.

Each class also derives from the closest builtin so callers can catch
either the domain type or the familiar ``ValueError``/``KeyError``/....
"""

from __future__ import annotations

__all__ = [
    "AltmError",
    "ShapeError",
    "ParameterError",
    "LabelError",
    "ModeError",
    "ConflictError",
    "HeadLookupError",
    "UsageError",
    "NumericalError",
    "RangeError",
    "ConfigError",
    "ArtifactIOError",
]


class AltmError(Exception):
    """Root of all project errors."""


class ShapeError(AltmError, ValueError):
    """Operand shapes do not fit together."""


class ParameterError(AltmError, ValueError):
    """A numeric parameter is outside its documented range."""


class LabelError(AltmError, ValueError):
    """A label matrix column is not exactly one-hot."""


class ModeError(AltmError, ValueError):
    """Operation requested on a network of the wrong kind."""


class ConflictError(AltmError, ValueError):
    """A name is already taken."""


class HeadLookupError(AltmError, KeyError):
    """Unknown head id."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class UsageError(AltmError, RuntimeError):
    """API called out of order or with stale state."""


class NumericalError(AltmError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class RangeError(AltmError, IndexError):
    """Index or epoch outside the available data."""


class ConfigError(AltmError, ValueError):
    """
    Invalid experiment configuration.

    Attributes:
        key: dotted path of the offending key, if known.
        line: 1-based line in the config document, if known.
        column: 1-based column in the config document, if known.
    """

    def __init__(
        self,
        message: str,
        *,
        key: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message + where)
        self.key = key
        self.line = line
        self.column = column


class ArtifactIOError(AltmError, OSError):
    """Reading or writing an artifact failed."""

    def __init__(self, message: str, path: object) -> None:
        super().__init__(f"{message}: {path}")
        self.path = path
