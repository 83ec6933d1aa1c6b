"""Exception types shared across the package."""


class AirtreeError(Exception):
    """Base class for all errors raised by this package."""


class MaskFormatError(AirtreeError):
    """A volume file is malformed or uses an unsupported encoding."""


class ShapeMismatchError(AirtreeError):
    """Prediction and ground truth grids have different dimensions."""


class EvaluationError(AirtreeError):
    """A case cannot be evaluated (degenerate input, empty reference, ...)."""


class PhantomError(AirtreeError):
    """Synthetic tree generation or degradation failed."""
