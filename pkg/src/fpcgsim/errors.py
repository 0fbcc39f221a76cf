"""Exception hierarchy shared across the simulator."""


class FpcgError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(FpcgError, ValueError):
    """A value is outside its mathematical/physical domain."""


class AliasingError(ParameterError):
    """Sampling rate too low for the requested carrier frequency."""


class CycleGeometryError(ParameterError):
    """Events do not fit inside their cardiac cycle."""


class ConfigError(FpcgError, ValueError):
    """Malformed or invalid configuration."""


class SamplingError(FpcgError, RuntimeError):
    """Parameter sampling failed (rejection starvation, stuck walkers)."""


class AnalysisError(FpcgError, RuntimeError):
    """Preprocessing/statistics pipeline failure."""


class PeriodicityError(AnalysisError):
    """No plausible cardiac periodicity found in the envelope."""


class SegmentationError(AnalysisError):
    """Cycle segmentation did not yield enough usable cycles."""


class CalibrationError(FpcgError, RuntimeError):
    """Per-cycle fitting or parameter summarization failure."""


class PipelineError(FpcgError, RuntimeError):
    """Failure of one stage of the synthesis pipeline, with attribution."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
