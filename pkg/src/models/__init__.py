"""
Models package for Tire GPR
"""

from .stream import RawRevolution, RawStream, RotationLabels
from .features import FeatureTable, PatchFeatures, PatchWindow
from .gp_model import FeatureConfig, Hyperparameters, Prediction, PredictionBatch, TrainedModel
from .reports import MetricsReport, StudyResult
from .maneuver import ManeuverSpec, TireParams

__all__ = [
    "RawRevolution",
    "RawStream",
    "RotationLabels",
    "FeatureTable",
    "PatchFeatures",
    "PatchWindow",
    "FeatureConfig",
    "Hyperparameters",
    "Prediction",
    "PredictionBatch",
    "TrainedModel",
    "MetricsReport",
    "StudyResult",
    "ManeuverSpec",
    "TireParams",
]
