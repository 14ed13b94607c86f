"""
Метрики классификации: точность, precision/recall/F1 по классам, матрица ошибок.
"""

from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from .datasets import BenchArgumentError, Dataset


@dataclass(frozen=True, eq=False)
class Metrics:
    """
    Метрики на тестовой выборке.

    confusion[i, j] - число строк класса classes[i], предсказанных как classes[j].
    Поля покрытия заполняются только для генеративных методов.
    """
    accuracy: float
    classes: Tuple[int, ...]
    precision: Dict[int, float]
    recall: Dict[int, float]
    f1: Dict[int, float]
    support: Dict[int, int]
    confusion: np.ndarray
    covered_modes: Optional[int] = None
    hq_ratio: Optional[float] = None
    sym_kl: Optional[float] = None

    def with_coverage(self, covered_modes: int, hq_ratio: float, sym_kl: float) -> "Metrics":
        return replace(self, covered_modes=covered_modes, hq_ratio=hq_ratio, sym_kl=sym_kl)


def metrics_from_predictions(y_true: Sequence[int], y_pred: Sequence[int],
                             classes: Sequence[int]) -> Metrics:
    """
    Метрики по истинным и предсказанным меткам.

    F1 класса, у которого precision и recall равны нулю, равна 0.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise BenchArgumentError("Нельзя вычислить метрики по пустой выборке")
    labels = list(classes)
    confusion = confusion_matrix(y_true, y_pred, labels=labels)
    precision, recall, f1, support = precision_recall_fscore_support(
        y_true, y_pred, labels=labels, zero_division=0
    )
    return Metrics(
        accuracy=float(np.trace(confusion) / confusion.sum()),
        classes=tuple(int(c) for c in labels),
        precision={c: float(v) for c, v in zip(labels, precision)},
        recall={c: float(v) for c, v in zip(labels, recall)},
        f1={c: float(v) for c, v in zip(labels, f1)},
        support={c: int(v) for c, v in zip(labels, support)},
        confusion=confusion,
    )


def metrics_from_confusion(confusion: np.ndarray, classes: Sequence[int]) -> Metrics:
    """Метрики по готовой матрице ошибок (строки - истинные классы)."""
    confusion = np.asarray(confusion, dtype=np.int64)
    labels = list(classes)
    if confusion.shape != (len(labels), len(labels)) or np.any(confusion < 0):
        raise BenchArgumentError("Матрица ошибок должна быть квадратной, неотрицательной и согласованной с классами")
    y_true, y_pred = [], []
    for i, true_label in enumerate(labels):
        for j, pred_label in enumerate(labels):
            y_true.extend([true_label] * int(confusion[i, j]))
            y_pred.extend([pred_label] * int(confusion[i, j]))
    return metrics_from_predictions(y_true, y_pred, labels)


def evaluate(classifier, test: Dataset) -> Metrics:
    """Метрики классификатора на тестовой выборке (по каталогу классов теста)."""
    return metrics_from_predictions(test.labels, classifier.predict(test.features), test.classes)
