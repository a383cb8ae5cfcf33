"""Exception types shared across the package."""


class CoastriseError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CoastriseError):
    """A grid or vector file could not be parsed."""


class UnsupportedFormat(CoastriseError):
    """The requested file format is not supported by this build."""


class IoError(CoastriseError):
    """A file could not be read or written."""


class CrsMismatch(CoastriseError):
    """Two layers carry different CRS tags."""


class AlignmentError(CoastriseError):
    """Two grids do not share the same georeferencing."""


class ExtentError(CoastriseError):
    """Two layers have disjoint map extents."""


class NoSeedError(CoastriseError):
    """No ocean seed cell intersects the grid."""


class EmptyFeatureError(CoastriseError):
    """A feature layer rasterized to zero cells."""


class MissingLayerError(CoastriseError):
    """A required input layer was not supplied."""


class InsufficientTraining(CoastriseError):
    """A class has too few training samples for a covariance estimate."""

    def __init__(self, class_id, message=None):
        self.class_id = class_id
        super().__init__(message or f"class {class_id}: too few training samples")


class SingularCovariance(CoastriseError):
    """A class covariance stayed singular after regularization."""

    def __init__(self, class_id, message=None):
        self.class_id = class_id
        super().__init__(message or f"class {class_id}: singular covariance")


class AllocationError(CoastriseError):
    """A sampling request cannot satisfy the per-class allocation rules."""


class EmptyAssessment(CoastriseError):
    """No valid reference point was available for accuracy assessment."""


class InsufficientSamples(CoastriseError):
    """Not enough eligible cells to draw the requested training samples."""


class DivergenceError(CoastriseError):
    """Network training produced a non-finite loss (try a lower lr_start)."""


class NoTransitionsError(CoastriseError):
    """No class transition met the cell-count threshold."""


class ConfigError(CoastriseError):
    """A pipeline configuration file is invalid.

    ``key_path`` points at the offending entry, e.g. ``inputs.dem``.
    """

    def __init__(self, key_path, message):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")
