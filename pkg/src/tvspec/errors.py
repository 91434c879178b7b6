"""Exception hierarchy shared across the package."""


class TvspecError(Exception):
    """Base class for all package errors."""


class ParameterError(TvspecError, ValueError):
    """Invalid argument or model parameter (CLI exit status 2)."""


class DataError(TvspecError, ValueError):
    """Malformed or non-finite input data (CLI exit status 3)."""


class ConfigError(TvspecError, ValueError):
    """Invalid configuration document."""


class BandwidthTooSmallError(ParameterError):
    """Smoothing window contains no raw grid point."""


class TruthUnavailableError(ParameterError):
    """Requested a closed-form spectrum for a model that has none."""


class HistoryUnavailableError(TvspecError):
    """Kernel reconstruction requested but no iteration history was kept."""
