"""Exception types raised across the engine."""


class EvotrackError(Exception):
    """Base class for all engine errors."""


class MalformedRecord(EvotrackError):
    """Input record is missing required fields or has invalid values."""


class EmptyEntitySet(EvotrackError):
    """Post carries zero entities after extraction; it can never gain edges."""


class NegativeGap(EvotrackError):
    """Decay evaluated on a negative time gap."""


class InvalidHitCount(EvotrackError):
    """Hit count exceeds the smaller entity set."""


class DuplicatePost(EvotrackError):
    """Post id already present in the network."""


class UnknownPost(EvotrackError):
    """Post id not present in the network."""


class StaleTimestamp(EvotrackError):
    """Incoming post maps to a moment outside the window advance range."""


class FutureQuery(EvotrackError):
    """Weight queried for a moment before the post existed."""


class NotCore(EvotrackError):
    """Expiry requested for a post that is not core."""


class InconsistentDelta(EvotrackError):
    """Delta references posts absent from the expected graph region."""


class InconsistentState(EvotrackError):
    """Internal invariant violation; the engine aborts rather than degrade."""


class EmptyEvent(EvotrackError):
    """Annotation requested for an empty cluster."""


class InvalidScript(EvotrackError):
    """Scenario script fails validation."""


class VersionMismatch(EvotrackError):
    """Snapshot written by an incompatible version."""


class CorruptSnapshot(EvotrackError):
    """Snapshot file is truncated or unparseable."""
