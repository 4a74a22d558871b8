from .base import (
    GenerateRequest,
    GenerateResponse,
    Generator,
    SamplingMode,
    SamplingSpec,
    StopReason,
    UpdateReport,
    derive_seed,
    truncate_at_stops,
)
from .conformance import ConformanceReport, conformance_check
from .external import ExternalGenerator
from .scripted import ScriptedGenerator
from .trainable import TrainableGenerator

__all__ = [
    "ConformanceReport",
    "ExternalGenerator",
    "GenerateRequest",
    "GenerateResponse",
    "Generator",
    "SamplingMode",
    "SamplingSpec",
    "ScriptedGenerator",
    "StopReason",
    "TrainableGenerator",
    "UpdateReport",
    "conformance_check",
    "derive_seed",
    "truncate_at_stops",
]
