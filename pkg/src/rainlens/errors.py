"""Exception types shared across the toolkit."""


class RainlensError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(RainlensError, ValueError):
    """A parameter is out of its documented range or inconsistent."""


class DimensionMismatchError(ParameterError):
    """Two rasters that must agree in shape do not."""


class FormatError(RainlensError):
    """A file is structurally not what the loader expects."""


class PairingError(RainlensError):
    """Images and labels (or two dataset trees) do not pair 1:1 by stem."""


class ManifestError(RainlensError):
    """A manifest is unreadable or internally inconsistent."""


class ManifestVersionError(ManifestError):
    """A manifest was written by an incompatible toolkit version."""
