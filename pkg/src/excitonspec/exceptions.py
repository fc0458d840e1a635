"""Exception taxonomy, aligned with the CLI exit codes."""

from __future__ import annotations

__all__ = ["ExcitonSpecError", "ConfigError", "FileFormatError", "NumericError"]


class ExcitonSpecError(Exception):
    """Base class for package errors."""


class ConfigError(ExcitonSpecError):
    """Invalid configuration values or keys (CLI exit code 1)."""


class NumericError(ExcitonSpecError):
    """Propagation or solver failure (CLI exit code 2)."""


class FileFormatError(ExcitonSpecError):
    """Unreadable or malformed data files (CLI exit code 3)."""
