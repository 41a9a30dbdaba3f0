"""Exception hierarchy shared across the toolkit."""


class PitchkitError(Exception):
    """Base class for all toolkit errors."""


class FormatError(PitchkitError):
    """File contents do not match the expected on-disk format."""


class UnsupportedError(PitchkitError):
    """Input is valid but outside what we deliberately support (e.g. multichannel)."""


class ArgumentError(PitchkitError):
    """Invalid argument value."""


class InputTooShort(PitchkitError):
    """Signal shorter than one analysis window."""


class ShapeError(PitchkitError):
    """Array has the wrong shape for this operation."""


class DomainError(PitchkitError):
    """Value outside the mathematical domain of the operation."""


class StateError(PitchkitError):
    """Operation called with inconsistent internal state (e.g. stale cache)."""


class EmptyBatchError(PitchkitError):
    """Loss requested on a batch with no voiced frames."""


class SkipExample(PitchkitError):
    """Signal raised by augmentation when an example cannot be used (e.g. silence)."""


class AlignmentError(PitchkitError):
    """Prediction and ground truth cannot be frame-aligned."""


class UndefinedMetric(PitchkitError):
    """Metric denominator is empty; the value is undefined, not zero."""


class DivergenceError(PitchkitError):
    """Training loss became non-finite."""
