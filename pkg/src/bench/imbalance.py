"""
Построение несбалансированных обучающих выборок.

Тестовая выборка отделяется до прореживания и остаётся сбалансированной:
по floor(test_fraction * min_count) строк каждого класса. Она зависит
только от seed, поэтому одинакова для всех значений IR.
"""

import logging
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .datasets import BenchError, Dataset


logger = logging.getLogger(__name__)

DEFAULT_TEST_FRACTION = 0.2


def minority_size(majority: int, ir: float) -> int:
    """round(majority / IR), не меньше 1 (округление половины вверх)."""
    return max(1, int(math.floor(majority / ir + 0.5)))


def _split_test(data: Dataset, classes: Sequence[int], test_fraction: float,
                seed: int) -> Tuple[Dict[int, np.ndarray], np.ndarray]:
    """Индексы оставшихся строк по классам и индексы сбалансированного теста."""
    if not 0 < test_fraction < 1:
        raise ImbalanceError(f"test_fraction должна лежать в (0, 1), получено {test_fraction}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    by_class = {c: np.flatnonzero(data.labels == c) for c in classes}
    for c, idx in by_class.items():
        if len(idx) == 0:
            raise ImbalanceError(f"Класс {c} отсутствует в данных")

    per_class = int(math.floor(test_fraction * min(len(idx) for idx in by_class.values())))
    if per_class < 1:
        raise ImbalanceError("Слишком мало строк для сбалансированной тестовой выборки")
    remaining: Dict[int, np.ndarray] = {}
    test: List[np.ndarray] = []
    for c in classes:
        perm = rng.permutation(by_class[c])
        test.append(np.sort(perm[:per_class]))
        remaining[c] = np.sort(perm[per_class:])
    return remaining, np.concatenate(test)


def make_imbalanced_multiclass(data: Dataset, majority_class: int, ir: float, seed: int,
                               classes: Sequence[int] = (),
                               test_fraction: float = DEFAULT_TEST_FRACTION) -> Tuple[Dataset, Dataset]:
    """
    Прореживание всех классов, кроме мажоритарного, до round(maj / IR).

    Мажоритарный класс сохраняется полностью (после отделения теста),
    остальные прореживаются равномерно без возвращения.

    Args:
        data: Исходный набор
        majority_class: Класс, задающий размер
        ir: Желаемый коэффициент дисбаланса (>= 1)
        seed: Seed разбиения
        classes: Используемые классы (по умолчанию весь каталог)
        test_fraction: Доля теста от самого малого класса

    Returns:
        (обучающая выборка, сбалансированный тест)

    Raises:
        ImbalanceError: Если IR недостижим; сообщение содержит допустимый диапазон
    """
    classes = tuple(classes) or data.classes
    if majority_class not in classes:
        raise ImbalanceError(f"Мажоритарный класс {majority_class} не входит в {classes}")
    if not ir >= 1:
        raise ImbalanceError(f"IR должен быть >= 1, получено {ir}")

    remaining, test_idx = _split_test(data, classes, test_fraction, seed)
    majority = len(remaining[majority_class])
    available = min(len(remaining[c]) for c in classes if c != majority_class)
    target = minority_size(majority, ir)
    max_ir = float(majority)
    min_ir = majority / available if available else math.inf
    if ir > max_ir or target > available:
        raise ImbalanceError(
            f"IR={ir} недостижим: при {majority} строках мажоритарного класса и "
            f"{available} доступных строках миноритарного допустимо IR в "
            f"[{min_ir:.3g}, {max_ir:.3g}]",
            min_ir=min_ir,
            max_ir=max_ir,
        )

    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    train_idx: List[np.ndarray] = []
    for c in classes:
        if c == majority_class:
            train_idx.append(remaining[c])
        else:
            train_idx.append(np.sort(rng.choice(remaining[c], size=target, replace=False)))

    train = data.take(np.concatenate(train_idx))
    test = data.take(test_idx)
    train = Dataset(train.features, train.labels, classes, data.source)
    test = Dataset(test.features, test.labels, classes, data.source)
    logger.debug("IR=%s: обучение %s, тест %s", ir, train.counts(), test.counts())
    return train, test


def make_imbalanced(data: Dataset, positive: int, negative: int, ir: float, seed: int,
                    test_fraction: float = DEFAULT_TEST_FRACTION) -> Tuple[Dataset, Dataset]:
    """
    Бинарная задача: positive - миноритарный класс, negative - мажоритарный.

    В обучающей выборке |negative| / |positive| = IR с точностью до округления.
    """
    if positive == negative:
        raise ImbalanceError("Миноритарный и мажоритарный классы должны различаться")
    return make_imbalanced_multiclass(data, negative, ir, seed, (negative, positive), test_fraction)


def imbalance_ratio(dataset: Dataset) -> float:
    """Наибольший размер класса, делённый на наименьший (по присутствующим классам)."""
    sizes = [n for n in dataset.counts().values() if n > 0]
    return max(sizes) / min(sizes)


class ImbalanceError(BenchError, ValueError):
    """Недостижимый IR или некорректные классы; min_ir/max_ir - допустимый диапазон."""

    def __init__(self, message: str, min_ir: float = math.nan, max_ir: float = math.nan) -> None:
        super().__init__(message)
        self.min_ir = min_ir
        self.max_ir = max_ir
