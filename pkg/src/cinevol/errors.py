"""Error types shared across the renderer."""


class CinevolError(Exception):
    """Base class for all renderer errors."""


class IngestError(CinevolError):
    """A volume, cubemap, or DICOM series could not be loaded."""


class UnsupportedFormat(IngestError):
    """The input is recognized but uses an unsupported encoding."""


class InvalidArgument(CinevolError):
    """An argument violates an operation's preconditions."""


class InvalidTransferFunction(CinevolError):
    """Transfer-function control points violate their invariants."""


class PresetParseError(CinevolError):
    """A transfer-function CSV preset is malformed.

    Carries the 1-based line number of the offending row.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SceneParseError(CinevolError):
    """A scene document is malformed.  Carries the offending key path."""

    def __init__(self, key_path, message=""):
        text = key_path if not message else f"{key_path}: {message}"
        super().__init__(text)
        self.key_path = key_path


class NoEnergy(CinevolError):
    """A light source carries no energy and cannot be sampled."""


class NotReady(CinevolError):
    """The requested result is not available yet."""
