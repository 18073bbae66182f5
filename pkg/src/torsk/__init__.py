"""Spatially aware echo state networks for prediction-based anomaly detection."""
from .detection import (
    DetectionResult,
    ESNAnomalyDetector,
    NormalityConfig,
    WindowPlan,
    normality_score,
    sliding_detect,
)
from .esn import SpatialESN
from .imed import GKernel
from .input_maps import InputMapSpec, InputPipeline, table_specs
from .reservoir import Reservoir, ReservoirConfig, init_reservoir
from .training import SolverSpec
from .trend import CycleBaseline, TrivialBaseline, decompose, reconstruct

__version__ = "0.1.0"

__all__ = [
    "CycleBaseline",
    "DetectionResult",
    "ESNAnomalyDetector",
    "GKernel",
    "InputMapSpec",
    "InputPipeline",
    "NormalityConfig",
    "Reservoir",
    "ReservoirConfig",
    "SolverSpec",
    "SpatialESN",
    "TrivialBaseline",
    "WindowPlan",
    "decompose",
    "init_reservoir",
    "normality_score",
    "reconstruct",
    "sliding_detect",
    "table_specs",
]
