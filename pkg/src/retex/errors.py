"""Exception types shared across the package."""


class RetexError(Exception):
    """Base class for all errors raised by this package."""


# --- raster ---

class UnreadableFile(RetexError):
    """File is missing or cannot be read."""


class UnsupportedFormat(RetexError):
    """File is readable but not a supported raster format."""


class ZeroDimension(RetexError):
    """Raster has zero width or height."""


class UnknownLabelValue(RetexError):
    """Label raster contains a pixel value absent from the class map."""


class UnknownClass(RetexError):
    """Requested class id is not present in the class map."""


class OutOfBounds(RetexError):
    """Rectangle extends outside the raster."""


# --- regions ---

class NoBackgroundPixels(RetexError):
    """Label raster contains no background-class pixels."""


class PixelOutOfBounds(RetexError):
    """Subarea member pixel lies outside the requested raster dimensions."""


# --- sampler ---

class MaskEmpty(RetexError):
    """Sampling mask has no true pixels."""


class AcceptanceFloor(RetexError):
    """Too few candidate crops were accepted; the mask cannot host crops."""


# --- embedder ---

class TooFewCandidates(RetexError):
    """Not enough candidates to train the embedder."""


class DivergedTraining(RetexError):
    """Training loss became non-finite."""


class UntrainedModel(RetexError):
    """Autoencoder model has no parameters."""


# --- cluster ---

class TooFewVectors(RetexError):
    """Fewer vectors than requested clusters."""


class DuplicateCentroids(RetexError):
    """Two centroids coincide; Davies-Bouldin index is undefined."""


# --- selector ---

class DimensionMismatch(RetexError):
    """Vector dimensions are inconsistent."""


class DegeneratePatch(RetexError):
    """Patch is too small for boundary comparison."""


# --- cli ---

class ConfigError(RetexError):
    """Invalid pipeline configuration."""


class UnwritableOutput(RetexError):
    """Output file or directory cannot be written."""
