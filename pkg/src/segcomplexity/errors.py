"""Exception hierarchy.

``SegComplexityError`` is the base for everything this package raises on
purpose. ``DataError`` covers problems with input data (missing files,
malformed masks, degenerate geometry); the CLI maps it to exit code 1.
Configuration mistakes raise ``ConfigError`` and map to exit code 2.
"""


class SegComplexityError(Exception):
    """Base class for all package errors."""


class DataError(SegComplexityError):
    """Input data violates a precondition."""


class ConfigError(SegComplexityError):
    """Invalid configuration or ablation spec."""


# --- dataset ---------------------------------------------------------------

class MissingFileError(DataError):
    pass


class CorruptPngError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class DuplicateIdError(DataError):
    pass


# --- mask geometry ---------------------------------------------------------

class EmptyMaskError(DataError):
    pass


class EmptyDomainError(DataError):
    pass


class DisconnectedRegionError(DataError):
    pass


# --- factors ---------------------------------------------------------------

class EmptyAfterErosionError(DataError):
    """Mask vanished under boundary erosion; the factor value is missing."""


class TooFewObjectsError(DataError):
    """Scene-level factor needs at least two objects."""


class EmptySideError(DataError):
    """Background or foreground pixel set is empty."""


class NoRegionsError(DataError):
    """Background encloses no region; the factor value is missing."""


# --- ablation --------------------------------------------------------------

class BankTooSmallError(DataError):
    """Texture bank has fewer tiles than objects to texture."""


class BankMissingError(ConfigError):
    """Ablation needs a texture bank but none was supplied."""


class EmptyBackgroundError(DataError):
    pass


class ObjectVanishedError(DataError):
    """An ablation would silently delete an object."""
