"""speechqa: batch generation, filtering, and scoring of speech-text QA datasets."""

from .records import (
    FilterStatus,
    LabelSource,
    PipelineConfig,
    Provenance,
    QATriplet,
    SamplingParams,
    UtteranceRecord,
)

__version__ = "0.1.0"

__all__ = [
    "FilterStatus",
    "LabelSource",
    "PipelineConfig",
    "Provenance",
    "QATriplet",
    "SamplingParams",
    "UtteranceRecord",
    "__version__",
]
