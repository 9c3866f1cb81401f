"""Goal-area conditioned multimodal motion forecasting on synthetic driving scenes."""
from .config import ExperimentConfig, LossConfig, ModelConfig, OptimConfig
from .metrics import MetricReport
from .model import MotionForecaster, compute_loss
from .scene import LaneGraph, NormalizationTransform, Scenario, normalize_scenario
from .synth import load_scenario, sample_scenario, save_scenario
from .train import Checkpoint, evaluate, train

__all__ = [
    "Checkpoint",
    "ExperimentConfig",
    "LaneGraph",
    "LossConfig",
    "MetricReport",
    "ModelConfig",
    "MotionForecaster",
    "NormalizationTransform",
    "OptimConfig",
    "Scenario",
    "compute_loss",
    "evaluate",
    "load_scenario",
    "normalize_scenario",
    "sample_scenario",
    "save_scenario",
    "train",
]
