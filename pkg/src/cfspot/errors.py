"""Exception types raised across the package."""


class CFSpotError(Exception):
    """Base class for all package errors."""


class TensorFormatError(CFSpotError, ValueError):
    """A tensor file is malformed. ``field`` names the offending header field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class BadMagic(TensorFormatError):
    pass


class UnsupportedVersion(TensorFormatError):
    pass


class UnsupportedDtype(TensorFormatError):
    pass


class BadRank(TensorFormatError):
    pass


class TruncatedPayload(TensorFormatError):
    pass


class TrailingData(TensorFormatError):
    pass


class IoFailure(CFSpotError, OSError):
    pass


class DimMismatch(CFSpotError, ValueError):
    pass


class ChannelMismatch(CFSpotError, ValueError):
    pass


class PointOutOfBounds(CFSpotError, IndexError):
    pass


class ClassOutOfRange(CFSpotError, IndexError):
    pass


class DegeneratePolygon(CFSpotError, ValueError):
    pass


class AlphabetTooLarge(CFSpotError, ValueError):
    pass


class UnknownTargetChar(CFSpotError, KeyError):
    pass


class PoolTooSmall(CFSpotError, ValueError):
    pass


class OutOfRange(CFSpotError, ValueError):
    pass


class ConfigError(CFSpotError, ValueError):
    pass
