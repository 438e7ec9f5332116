"""Shared exception types, mapped to CLI exit codes (data=2, backend=3)."""


class DataError(ValueError):
    """Malformed, inconsistent, or missing input data."""


class BackendError(RuntimeError):
    """A classifier backend failed: process death, protocol violation, timeout."""
