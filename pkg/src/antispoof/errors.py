"""Exception types shared across the pipeline."""


class ShapeError(ValueError):
    """Tensor shapes are incompatible with the requested operation."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class ParseError(ValueError):
    """Malformed manifest or config file content."""


class MissingAssetError(FileNotFoundError):
    """A file referenced by a manifest does not exist."""


class DegenerateLandmarksError(ValueError):
    """Landmark set does not span a usable bounding box."""


class RegionError(ValueError):
    """Crop region does not intersect the image."""


class TemporalError(ValueError):
    """Frame stack violates the consecutive-frames contract."""


class EmptyDatasetError(ValueError):
    """An operation that needs samples received none."""


class DegenerateLabelsError(ValueError):
    """Both classes are required but only one is present."""


class SearchError(RuntimeError):
    """Every cell of a hyperparameter grid failed to train."""


class ConvergenceWarning(UserWarning):
    """Solver stopped at the iteration cap before reaching tolerance."""
