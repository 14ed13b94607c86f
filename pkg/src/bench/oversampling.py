"""
Досэмплирование миноритарных классов.

    - random_oversample: повтор случайных строк с возвращением (Os+CN)
    - oversample_with_generator: синтетика из обученного генератора
    - multiclass_balance: по генератору на каждый недобранный класс
"""

import logging
from typing import Dict, Mapping, Optional

import numpy as np

from trainer import GeneratorModel
from .datasets import BenchError, Dataset


logger = logging.getLogger(__name__)


def _deficit(train: Dataset, label: int) -> int:
    counts = train.counts()
    return max(counts.values()) - counts[label]


def synthesize(model: GeneratorModel, n: int, seed: int) -> np.ndarray:
    """n строк G(z), z ~ N(0, I); одинаковы для одинаковых seed."""
    if n < 0:
        raise OversamplingError(f"Число строк не может быть отрицательным: {n}")
    return model.sample(n, np.random.default_rng(seed))


def oversample_with_generator(train: Dataset, model: GeneratorModel, minority: int,
                              seed: int, n_needed: Optional[int] = None) -> Dataset:
    """
    Дополнение миноритарного класса синтетическими строками.

    Args:
        train: Обучающая выборка
        model: Генератор, обученный на строках класса minority
        minority: Метка миноритарного класса
        seed: Seed латентных векторов
        n_needed: Сколько строк добавить (по умолчанию - до размера наибольшего класса)

    Returns:
        Новый Dataset
    """
    if model.spec.output_dim != train.dim:
        raise OversamplingError(
            f"Генератор выдаёт {model.spec.output_dim} признаков, в данных {train.dim}"
        )
    n = _deficit(train, minority) if n_needed is None else n_needed
    rows = synthesize(model, n, seed)
    logger.debug("Класс %d: добавлено %d синтетических строк", minority, n)
    return train.extend(rows, minority)


def random_oversample(train: Dataset, seed: int) -> Dataset:
    """Каждый класс дополняется случайными повторами своих строк до наибольшего."""
    rng = np.random.default_rng(seed)
    result = train
    target = max(train.counts().values())
    for label, count in train.counts().items():
        if count == 0:
            raise OversamplingError(f"Класс {label} отсутствует: повторять нечего")
        if count < target:
            rows = train.of_class(label)
            result = result.extend(rows[rng.integers(0, count, size=target - count)], label)
    return result


def multiclass_balance(train: Dataset, generators: Mapping[int, GeneratorModel],
                       seed: int) -> Dataset:
    """
    Доведение каждого класса до размера мажоритарного.

    Raises:
        OversamplingError: Если для недобранного класса нет генератора
    """
    counts = train.counts()
    target = max(counts.values())
    missing = [c for c, n in counts.items() if n < target and c not in generators]
    if missing:
        raise OversamplingError(f"Нет генератора для классов {missing}")

    result = train
    seeds = np.random.SeedSequence(seed).spawn(len(train.classes))
    for label, child in zip(train.classes, seeds):
        need = target - counts[label]
        if need > 0:
            rows = generators[label].sample(need, np.random.default_rng(child))
            result = result.extend(rows, label)
    return result


class OversamplingError(BenchError, ValueError):
    """Ошибка досэмплирования."""
    pass
