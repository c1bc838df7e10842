from .kernels import KernelSpec, kernel_eval, kernel_matrix
from .selection import (
    DEFAULT_CS,
    DEFAULT_KERNELS,
    WIDE_KERNELS,
    AccuracyTable,
    ConfusionMatrix,
    accuracy,
    boundary_csv,
    confusion,
    confusion_from_labels,
    export_boundary,
    grid_search,
    select_best,
)
from .smo import Scaling, SvmError, SvmModel, TrainingDiagnostics, decision_value, predict, solve_dual, train

__all__ = [
    "AccuracyTable",
    "ConfusionMatrix",
    "DEFAULT_CS",
    "DEFAULT_KERNELS",
    "KernelSpec",
    "Scaling",
    "SvmError",
    "SvmModel",
    "WIDE_KERNELS",
    "TrainingDiagnostics",
    "accuracy",
    "boundary_csv",
    "confusion",
    "confusion_from_labels",
    "decision_value",
    "export_boundary",
    "grid_search",
    "kernel_eval",
    "kernel_matrix",
    "predict",
    "select_best",
    "solve_dual",
    "train",
]
