"""CNN inference engine with zero-value prediction.

Implements diagonal-gated prediction of zero activations over
non-overlapping windows of conv output feature maps, with full MAC
accounting, activation-breakdown statistics, spatial-correlation
profiling, and accuracy-delta evaluation.
"""

from .correlation import (
    CorrelationReport,
    LayerCorrelation,
    measure_window_fraction,
    profile_model,
)
from .engine import (
    ForwardTrace,
    LayerMacs,
    MacLedger,
    analytic_macs,
    conv2d,
    forward_baseline,
    linear,
    maxpool2d,
    relu,
)
from .errors import (
    DataIOError,
    FormatError,
    UndefinedMetricError,
    ValidationError,
    ZvpredError,
)
from .kernels import BACKEND
from .model import (
    ConvSpec,
    FlattenSpec,
    LabeledDataset,
    LayerSpec,
    LinearSpec,
    MaxPoolSpec,
    Model,
    ReLUSpec,
    load_idx_dataset,
    load_model,
    save_model,
)
from .predictor import (
    LayerStats,
    PredictionConfig,
    Scope,
    Window,
    WindowGrid,
    diagonal_cells,
    forward_predicted,
    mac_reduction,
    merge_stats,
    partition_windows,
    predict_zero_windows,
)
from .report import EvalResult, evaluate_model, inspect_model, topk_accuracy
from .tensor import Shape3, as_tensor, count_zeros, tensor_get, tensor_zeros

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConvSpec",
    "CorrelationReport",
    "DataIOError",
    "EvalResult",
    "FlattenSpec",
    "FormatError",
    "ForwardTrace",
    "LabeledDataset",
    "LayerCorrelation",
    "LayerMacs",
    "LayerSpec",
    "LayerStats",
    "LinearSpec",
    "MacLedger",
    "MaxPoolSpec",
    "Model",
    "PredictionConfig",
    "ReLUSpec",
    "Scope",
    "Shape3",
    "UndefinedMetricError",
    "ValidationError",
    "Window",
    "WindowGrid",
    "ZvpredError",
    "analytic_macs",
    "as_tensor",
    "conv2d",
    "count_zeros",
    "diagonal_cells",
    "evaluate_model",
    "forward_baseline",
    "forward_predicted",
    "inspect_model",
    "linear",
    "load_idx_dataset",
    "load_model",
    "mac_reduction",
    "maxpool2d",
    "measure_window_fraction",
    "merge_stats",
    "partition_windows",
    "predict_zero_windows",
    "profile_model",
    "relu",
    "save_model",
    "tensor_get",
    "tensor_zeros",
    "topk_accuracy",
]
