"""Exception types shared across the pipeline.

Every error raised on a validation path derives from LivediffError so the
CLI can map them to exit code 1 without enumerating each class.
"""


class LivediffError(Exception):
    """Base class for all livediff validation and processing errors."""


class MalformedFile(LivediffError):
    """Bytes could not be decoded as the stated file format."""


class UnsupportedFormat(LivediffError):
    """Requested image format is outside the supported set."""


class InvalidDimensions(LivediffError):
    """Requested raster dimensions are out of the supported range."""


class DimensionMismatch(LivediffError):
    """Operands disagree on vector or matrix dimensions."""


class InsufficientSamples(LivediffError):
    """Not enough samples to fit the requested reduction."""


class SingleClass(LivediffError):
    """Training or scoring data contains only one class label."""


class MissingClass(LivediffError):
    """A score list lacks one of the two classes, leaving a rate undefined."""


class ParseError(LivediffError):
    """A text artifact (manifest, config, model file) failed to parse."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingFile(LivediffError):
    """One or more referenced files do not exist."""


class DuplicateId(LivediffError):
    """A manifest lists the same source_id more than once."""


class MissingDeepFeature(LivediffError):
    """A manifest entry has no matching record in the deep-feature file."""
