"""Exception hierarchy for the frogid package.

Every error raised on purpose by this package derives from FrogidError so
callers (and the CLI) can distinguish data problems from genuine bugs.
"""


class FrogidError(Exception):
    """Base class for all frogid errors."""


# --- audio I/O ---

class NotWav(FrogidError):
    """File is not a RIFF/WAVE container."""


class UnsupportedEncoding(FrogidError):
    """WAV data is not 16-bit integer PCM."""


class TruncatedFile(FrogidError):
    """Data chunk is shorter than its declared size."""


class MalformedCueChunk(FrogidError):
    """Cue chunk size is inconsistent with its entry count."""


# --- segmentation ---

class InvalidBand(FrogidError):
    """Band edges are out of order or exceed the Nyquist frequency."""


class ClipTooShort(FrogidError):
    """Audio is shorter than one analysis frame."""


class EmptySequence(FrogidError):
    """An operation that needs at least one value got an empty sequence."""


# --- features ---

class SegmentTooShort(FrogidError):
    """Segment is shorter than one feature frame."""


class DegenerateBand(FrogidError):
    """Fewer usable FFT bins than filters in the requested band."""


# --- mixture models / detection ---

class TooFewFrames(FrogidError):
    """Fewer training frames than mixture components."""


class DimensionMismatch(FrogidError):
    """Feature dimensionality does not match the model."""


class EmptyMatrix(FrogidError):
    """Feature matrix has no frames."""


class FingerprintMismatch(FrogidError):
    """Model store was trained with different feature settings."""


# --- evaluation ---

class InsufficientData(FrogidError):
    """Not enough labeled audio for the requested split or training run."""


class EmptyRow(FrogidError):
    """Confusion matrix row with no validation items."""


class DegenerateClass(FrogidError):
    """ROC requested for a class with no positives or no negatives."""


class LengthMismatch(FrogidError):
    """Paired vectors do not have matching shapes."""
