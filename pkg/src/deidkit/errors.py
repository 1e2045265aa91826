"""Toolkit error hierarchy.

Exit-code convention used by the CLI: 1 for configuration problems,
2 for bad or missing data, 3 for anything unexpected.
"""


class DeidError(Exception):
    exit_code = 3


class ConfigError(DeidError):
    """Invalid configuration: unknown keys, missing paths, bad option values."""

    exit_code = 1


class DataError(DeidError):
    """Malformed or inconsistent input data."""

    exit_code = 2
