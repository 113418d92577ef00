"""FMCW radar vital-sign simulation and template-matching extraction."""

from .evaluate import (AblationGrid, TrialReport, baseline_singlebin_fft,
                       pcc, rate_error, run_ablation, summarize)
from .fileio import FileFormatError, read_cube, write_cube
from .fit import FitConfig, FitResult, ParamBounds, fit_templates
from .pipeline import METHODS, ExtractResult, extract_vitals
from .simulate import (IFDataCube, RadarConfig, RbmSpec, SceneSpec,
                       ScatterPoint, chest_scene, confusion_scene,
                       snr_to_noise_std, synthesize_if_cube)
from .templates import TemplateParams

__version__ = "0.1.0"

__all__ = [
    "AblationGrid", "ExtractResult", "FileFormatError", "FitConfig",
    "FitResult", "IFDataCube", "METHODS", "ParamBounds", "RadarConfig",
    "RbmSpec", "SceneSpec", "ScatterPoint", "TemplateParams", "TrialReport",
    "baseline_singlebin_fft", "chest_scene", "confusion_scene",
    "extract_vitals", "fit_templates", "pcc", "rate_error", "read_cube",
    "run_ablation", "snr_to_noise_std", "summarize", "synthesize_if_cube",
    "write_cube", "__version__",
]
