"""Exception types shared across the toolkit."""


class LatactError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(LatactError):
    """Vector/matrix dimensions do not match the geometry or model."""


class NotFiniteError(LatactError):
    """An input contained NaN or infinity."""


class FormatError(LatactError):
    """A serialized file is malformed (bad magic, truncated, inconsistent)."""


class VersionError(FormatError):
    """A serialized file carries an unsupported format version."""


class ArchitectureError(LatactError):
    """A loaded model's configuration does not match its parameter blocks."""


class GenerationError(LatactError):
    """Task synthesis failed (e.g. a waypoint left the reachable workspace)."""


class RolloutAborted(LatactError):
    """A rollout stopped early; ``states`` holds the partial trajectory."""

    def __init__(self, message, states):
        super().__init__(message)
        self.states = states


class AlignmentError(LatactError):
    """An alignment transform was rejected (non-orthogonal or unsupported)."""


class UnknownSessionError(LatactError):
    """No teleoperation session exists with the given id."""
