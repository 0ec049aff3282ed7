"""Exception types shared across the package."""


class ClusterRegError(Exception):
    """Base class for all toolkit errors."""


class PanelFormatError(ClusterRegError):
    """Malformed or inconsistent panel file content."""


class PreprocessError(ClusterRegError):
    """Cleaning or transform failed (e.g. panel empty after cleaning)."""


class ClusteringError(ClusterRegError):
    """Clustering precondition violated or no admissible clustering found."""


class RegressionError(ClusterRegError):
    """Regression precondition violated (shapes, undefined metrics, grids)."""


class ConfigError(ClusterRegError):
    """Invalid pipeline configuration."""


class PipelineStageError(ClusterRegError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
