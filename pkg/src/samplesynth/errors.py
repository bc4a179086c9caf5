"""Shared error categories used across the package and the HTTP service."""


class SynthError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SynthError):
    """Invalid configuration, parameters, or request shape."""


class DataError(SynthError):
    """Invalid or unusable input data (CSV files, sample sets)."""
