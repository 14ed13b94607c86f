"""
Функции потерь GAN и функция приспособленности потомков.

Содержит:
    - MutationObjective: три целевые функции генератора (мутации)
    - disc_loss(): кросс-энтропия дискриминатора
    - gen_loss(): потеря генератора для выбранной мутации
    - fitness(): качество + разнообразие для ранжирования потомков

Соглашение о знаке: потери минимизируются, приспособленность максимизируется.
Тренер сравнивает FitnessScore.combined напрямую; симулятор теории
минимизирует f = -F.
"""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np


# Нижняя граница нормы градиента перед логарифмом
GRAD_NORM_FLOOR = 1e-12
DEFAULT_GAMMA_F = 0.5


class MutationObjective(str, Enum):
    """Целевая функция генератора; значение - идентификатор в CSV."""
    MINIMAX = "minimax"
    NONSATURATING = "nonsaturating"
    LEASTSQUARES = "leastsquares"

    @classmethod
    def parse(cls, tag: str) -> "MutationObjective":
        """
        Разбор идентификатора мутации.

        Raises:
            LossArgumentError: Для неизвестного идентификатора
        """
        try:
            return cls(tag)
        except ValueError:
            known = ", ".join(m.value for m in cls)
            raise LossArgumentError(f"Неизвестная мутация '{tag}' (доступны: {known})")


ALL_OBJECTIVES = tuple(MutationObjective)


class DiscLoss(NamedTuple):
    """Потеря дискриминатора и частные производные по его выходам."""
    loss: float
    grad_real: np.ndarray
    grad_fake: np.ndarray


class GenLoss(NamedTuple):
    """Потеря генератора и частные производные по D(G(z))."""
    loss: float
    grad: np.ndarray


@dataclass(frozen=True)
class FitnessScore:
    """Приспособленность: combined = quality + gamma * diversity."""
    quality: float
    diversity: float
    combined: float
    gamma: float

    def __lt__(self, other: "FitnessScore") -> bool:
        return self.combined < other.combined


def _as_probabilities(values: np.ndarray, name: str) -> np.ndarray:
    d = np.asarray(values, dtype=np.float64).ravel()
    if d.size == 0:
        raise LossArgumentError(f"Пустой батч: {name}")
    return d


def disc_loss(d_real: np.ndarray, d_fake: np.ndarray) -> DiscLoss:
    """
    Кросс-энтропия дискриминатора: -mean(log d_real) - mean(log(1 - d_fake)).

    Args:
        d_real: Оценки D на настоящих данных, значения в (0, 1)
        d_fake: Оценки D на сгенерированных данных, значения в (0, 1)

    Returns:
        DiscLoss с потерей и производными по каждому элементу

    Raises:
        LossArgumentError: Если один из батчей пуст
    """
    real = _as_probabilities(d_real, "d_real")
    fake = _as_probabilities(d_fake, "d_fake")
    loss = -np.mean(np.log(real)) - np.mean(np.log1p(-fake))
    grad_real = -1.0 / (real.size * real)
    grad_fake = 1.0 / (fake.size * (1.0 - fake))
    return DiscLoss(float(loss), grad_real, grad_fake)


def gen_loss(objective: MutationObjective, d_fake: np.ndarray) -> GenLoss:
    """
    Потеря генератора для мутации.

    minimax:       mean(log(1 - d))
    nonsaturating: -mean(log d)
    leastsquares:  mean((d - 1)^2)

    Все три строго убывают по каждому d: генератор тянет D(G(z)) к 1.

    Raises:
        LossArgumentError: Если батч пуст
    """
    d = _as_probabilities(d_fake, "d_fake")
    n = d.size
    objective = MutationObjective(objective)
    if objective is MutationObjective.MINIMAX:
        return GenLoss(float(np.mean(np.log1p(-d))), -1.0 / (n * (1.0 - d)))
    if objective is MutationObjective.NONSATURATING:
        return GenLoss(float(-np.mean(np.log(d))), -1.0 / (n * d))
    return GenLoss(float(np.mean((d - 1.0) ** 2)), 2.0 * (d - 1.0) / n)


def fitness(d_fake: np.ndarray, disc_grad_norm: float,
            gamma: float = DEFAULT_GAMMA_F) -> FitnessScore:
    """
    Приспособленность генератора.

    quality = mean(D(G(z))), diversity = -log(||grad_D disc_loss||),
    combined = quality + gamma * diversity. Чем больше, тем лучше.

    Args:
        d_fake: Оценки D на сгенерированных данных
        disc_grad_norm: L2-норма градиента потерь D по его параметрам
        gamma: Вес разнообразия (>= 0)

    Returns:
        FitnessScore
    """
    d = _as_probabilities(d_fake, "d_fake")
    if disc_grad_norm < 0:
        raise LossArgumentError("Норма градиента не может быть отрицательной")
    quality = float(np.mean(d))
    diversity = float(-np.log(max(disc_grad_norm, GRAD_NORM_FLOOR)))
    return FitnessScore(quality, diversity, quality + gamma * diversity, gamma)


class LossError(Exception):
    """Базовый класс ошибок функций потерь."""
    pass


class LossArgumentError(LossError, ValueError):
    """Некорректные аргументы (пустой батч, неизвестная мутация)."""
    pass
