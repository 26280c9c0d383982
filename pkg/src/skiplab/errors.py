class SkipLabError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(SkipLabError):
    """Invalid shapes, geometries, or option combinations caught up front."""


class DataError(SkipLabError):
    """Malformed or missing input data (files, labels, stats)."""


class ContractError(SkipLabError):
    """An API was called with state it explicitly does not accept."""


class InternalError(SkipLabError):
    """Invariant violation that indicates a bug (e.g. a broken graph)."""
