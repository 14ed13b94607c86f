"""
Стенд дисбаланса классов.

Компоненты:
    - datasets: смеси гауссиан, CSV, стандартизация
    - imbalance: несбалансированные выборки со сбалансированным тестом
    - oversampling: случайное и генеративное досэмплирование
    - classifier: MLP-классификатор CN
    - metrics: точность, precision/recall/F1, матрица ошибок
    - coverage: покрытие мод по известной смеси
    - pipeline: ячейка (метод, IR, seed) и агрегирование
"""

from .datasets import (
    MixtureSpec,
    Dataset,
    Standardizer,
    ring_spec,
    grid_spec,
    gaussian_ring,
    gaussian_grid,
    interleaved_rings,
    load_dataset_csv,
    load_digits_csv,
    save_dataset_csv,
    BenchError,
    BenchArgumentError,
    DatasetError,
)
from .imbalance import make_imbalanced, make_imbalanced_multiclass, minority_size, imbalance_ratio, ImbalanceError
from .oversampling import synthesize, oversample_with_generator, random_oversample, multiclass_balance, OversamplingError
from .classifier import ClassifierConfig, Classifier, train_classifier, ClassifierError
from .metrics import Metrics, metrics_from_predictions, metrics_from_confusion, evaluate
from .coverage import CoverageReport, assign_modes, mode_coverage, symmetric_kl
from .pipeline import (
    METHODS,
    METRIC_COLUMNS,
    BenchTask,
    CellResult,
    run_cell,
    results_frame,
    aggregate_means,
    write_frame_csv,
)

__all__ = [
    "MixtureSpec", "Dataset", "Standardizer", "ring_spec", "grid_spec",
    "gaussian_ring", "gaussian_grid", "interleaved_rings",
    "load_dataset_csv", "load_digits_csv", "save_dataset_csv",
    "make_imbalanced", "make_imbalanced_multiclass", "minority_size", "imbalance_ratio",
    "synthesize", "oversample_with_generator", "random_oversample", "multiclass_balance",
    "ClassifierConfig", "Classifier", "train_classifier",
    "Metrics", "metrics_from_predictions", "metrics_from_confusion", "evaluate",
    "CoverageReport", "assign_modes", "mode_coverage", "symmetric_kl",
    "METHODS", "METRIC_COLUMNS", "BenchTask", "CellResult", "run_cell",
    "results_frame", "aggregate_means", "write_frame_csv",
    "BenchError", "BenchArgumentError", "DatasetError", "ImbalanceError",
    "OversamplingError", "ClassifierError",
]
