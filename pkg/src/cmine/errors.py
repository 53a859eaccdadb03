"""Exception hierarchy shared by every cmine module."""

from __future__ import annotations


class CmineError(Exception):
    """Base class for all cmine errors."""


class ConfigError(CmineError, ValueError):
    """Invalid or unsupported configuration value."""


class UnsupportedConfigError(ConfigError):
    """A declared configuration value that this build does not implement."""


class ConfigurationMismatchError(ConfigError):
    """Index-time and search-time normalization settings differ."""


class ParseError(CmineError, ValueError):
    """Malformed line in a data file."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class IndexFormatError(CmineError):
    """An index file is truncated, corrupt, or of an unknown format version."""
