"""
Exception hierarchy shared by every YMGround module.

Each failure mode named in the requirements maps to one class so the CLI can
translate it into an exit code without string matching.
"""


class YMGroundError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(YMGroundError, ValueError):
    """An argument is outside the operation's domain."""


class ConfigError(InvalidArgumentError):
    """A run configuration failed validation."""


class BranchCutError(YMGroundError):
    """A group element sits on or near the principal-log branch cut."""


class BoundaryError(YMGroundError, IndexError):
    """A lattice index falls outside the open time boundary."""


class InvalidPotentialError(YMGroundError):
    """A potential is negative somewhere or has no zero minimum."""


class ConvergenceError(YMGroundError):
    """An iterative solver stopped before meeting its tolerance."""


class DiagnosticUnavailableError(YMGroundError):
    """Not enough signal to compute a diagnostic."""


class FieldFormatError(YMGroundError):
    """A field file could not be decoded."""


class MagicMismatchError(FieldFormatError):
    """The file does not start with the expected magic bytes."""


class VersionMismatchError(FieldFormatError):
    """The file declares an unsupported format version."""


class TruncatedFileError(FieldFormatError):
    """The file ends before the declared payload and checksum."""


class ChecksumError(FieldFormatError):
    """The stored CRC32 does not match the payload."""
