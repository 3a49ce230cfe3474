"""Exception types raised across the package."""


class SweepRLError(Exception):
    """Base class for all package errors."""


# -- environment --------------------------------------------------------

class NoFreeCellError(SweepRLError):
    """The map contains no free cell to place the agent on."""


class EpisodeFinishedError(SweepRLError):
    """step() was called after the episode already ended."""


# -- networks / learners -------------------------------------------------

class ShapeMismatchError(SweepRLError):
    """An input or gradient does not match the network's layout."""


class EmptyBufferError(SweepRLError):
    """No kept episodes remain to update from."""


class InsufficientSamplesError(SweepRLError):
    """Replay memory holds fewer transitions than one batch."""


# -- planners ------------------------------------------------------------

class TrappedError(SweepRLError):
    """No octant leads to a free cell from the current position."""


class UnreachableError(SweepRLError):
    """Some free cell cannot be covered from the start position."""


# -- observations / policies ---------------------------------------------

class ObservationMismatchError(SweepRLError):
    """A policy's observation layout does not fit the target map."""


# -- files ----------------------------------------------------------------

class MalformedCsvError(SweepRLError):
    """A metrics CSV is empty or missing required columns."""


class BadMagicError(SweepRLError):
    """Policy file does not start with the expected magic string."""


class ArchMismatchError(SweepRLError):
    """Policy file payload does not match its declared architecture."""


class TruncatedFileError(SweepRLError):
    """Policy file ends before the declared payload is complete."""


# -- map parsing -----------------------------------------------------------

class MapFormatError(SweepRLError):
    """Base class for map text problems."""


class RaggedRowsError(MapFormatError):
    """Map rows have unequal lengths."""


class UnknownCharError(MapFormatError):
    """Map text contains a character other than '.', '#', 'S'."""


class MultipleStartsError(MapFormatError):
    """Map text contains more than one 'S'."""


class EmptyMapError(MapFormatError):
    """Map text contains no rows."""
