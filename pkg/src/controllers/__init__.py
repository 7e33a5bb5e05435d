"""
Controllers package for Tire GPR
"""

from .app_controller import PipelineController
from .signal_processor import FeatureExtractor

__all__ = ["PipelineController", "FeatureExtractor"]
