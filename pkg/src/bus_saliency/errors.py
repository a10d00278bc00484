"""Exception types shared across the pipeline."""


class BusSaliencyError(Exception):
    """Base class for all package errors."""


class ImageIOError(BusSaliencyError):
    """File could not be read or written."""


class ImageFormatError(BusSaliencyError):
    """File was readable but is not a supported 8-bit grayscale image."""


class LayeringError(BusSaliencyError):
    """Layer decomposition cannot run (too few regions)."""


class PhantomSpecError(BusSaliencyError):
    """Synthetic phantom description is inconsistent."""


class SolverError(BusSaliencyError):
    """Interior point solve failed structurally (not mere non-convergence)."""


class PipelineStageError(BusSaliencyError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
