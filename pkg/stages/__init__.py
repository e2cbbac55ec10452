"""
Stage modules for the unfolding pipeline.

This package contains all stage implementations that can be dynamically
loaded and executed by the PipelineBuilder.
"""

from .base_stage import BaseStage, StageInput, StageOutput
from .analysis_stage import AnalysisStage
from .versality_stage import VersalityStage
from .synthesis_stage import SynthesisStage
from .validation_stage import ValidationStage

__all__ = [
    "BaseStage",
    "StageInput",
    "StageOutput",
    "AnalysisStage",
    "VersalityStage",
    "SynthesisStage",
    "ValidationStage",
]
