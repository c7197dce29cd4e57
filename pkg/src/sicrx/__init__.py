"""Overloaded multi-LNB satellite receiver simulator.

Successive interference cancellation with hybrid (MRC + compromised-AR)
beamforming and disjoint ML detection, plus the SIC MRC/ML, SIC DML,
joint-ML and MMSE baselines, driven by a deterministic Monte-Carlo BER
engine.
"""

from .beamforming import BeamWeights, CovarianceSet, ar_weights, build_covariances, car_weights, mrc_weights
from .detection import (
    DETECTOR_IDS,
    CarParams,
    Constellation,
    DetectionResult,
    Detector,
    build_detector,
    jml_detect,
    mmse_detect,
    sic_dml,
    sic_hy_ml,
    sic_mrc_ml,
    slicer_ml,
)
from .montecarlo import BerRecord, SymbolFrame, generate_frame, run_point, run_sweep
from .scenario import (
    ArrayResponse,
    NoiseModel,
    ScenarioConfig,
    build_array_response,
    make_noise_model,
    noise_power,
    pattern_gain,
    sample_noise,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayResponse",
    "BeamWeights",
    "BerRecord",
    "CarParams",
    "Constellation",
    "CovarianceSet",
    "DETECTOR_IDS",
    "DetectionResult",
    "Detector",
    "NoiseModel",
    "ScenarioConfig",
    "SymbolFrame",
    "ar_weights",
    "build_array_response",
    "build_covariances",
    "build_detector",
    "car_weights",
    "generate_frame",
    "jml_detect",
    "make_noise_model",
    "mmse_detect",
    "mrc_weights",
    "noise_power",
    "pattern_gain",
    "run_point",
    "run_sweep",
    "sample_noise",
    "sic_dml",
    "sic_hy_ml",
    "sic_mrc_ml",
    "slicer_ml",
]
