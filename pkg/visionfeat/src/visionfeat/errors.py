"""Exception types for the feature extraction pipeline."""


class VisionfeatError(Exception):
    """Base class for extractor failures."""


class ModelLoadError(VisionfeatError):
    """A detector or encoder resource could not be loaded."""


class UnreadableImage(VisionfeatError):
    """The input file is not a decodable image."""
