"""Calibration toolkit for small classifiers.

Measures miscalibration (ECE/SCE/ACE), builds reliability diagrams, and fits
post-hoc calibrators (plain temperature scaling and a joint universal input
perturbation plus output temperature) over a portable MLP model format.
Exposed as a library, a CLI (``clampkit``), and an HTTP service with an
interactive browser panel.
"""

from .calibrate import (
    Calibrator,
    FitReport,
    TrainConfig,
    apply,
    fit_neural_clamping,
    fit_temperature,
)
from .dataset import (
    InputDataset,
    LogitDataset,
    Prediction,
    load_features_csv,
    load_logits_csv,
    parse_features_csv,
    parse_logits_csv,
    predict,
    softmax,
    split,
    top1,
    validate_probs,
    write_features_csv,
    write_logits_csv,
)
from .diagram import BinStat, ReliabilityDiagram, build_diagram, render_svg
from .errors import DimensionMismatchError, ValidationError
from .metrics import (
    BinSpec,
    MetricReport,
    ace,
    bin_index,
    compute_report,
    ece,
    focal_loss,
    nll,
    sce,
)
from .model import (
    ClampedForwardTrace,
    MlpModel,
    backward,
    finite_difference_check,
    forward,
    load_model_json,
    mean_loss,
    model_from_dict,
    model_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "BinSpec",
    "BinStat",
    "Calibrator",
    "ClampedForwardTrace",
    "DimensionMismatchError",
    "FitReport",
    "InputDataset",
    "LogitDataset",
    "MetricReport",
    "MlpModel",
    "Prediction",
    "ReliabilityDiagram",
    "TrainConfig",
    "ValidationError",
    "ace",
    "apply",
    "backward",
    "bin_index",
    "build_diagram",
    "compute_report",
    "ece",
    "finite_difference_check",
    "fit_neural_clamping",
    "fit_temperature",
    "focal_loss",
    "forward",
    "load_features_csv",
    "load_logits_csv",
    "load_model_json",
    "mean_loss",
    "model_from_dict",
    "model_to_dict",
    "nll",
    "parse_features_csv",
    "parse_logits_csv",
    "predict",
    "render_svg",
    "sce",
    "softmax",
    "split",
    "top1",
    "validate_probs",
    "write_features_csv",
    "write_logits_csv",
]
