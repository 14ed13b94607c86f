"""
Имитация отжига: критерий Метрополиса и геометрическое охлаждение.

Δ = max(0, F_parent - F_challenger), P = exp(-Δ / T): улучшения принимаются
всегда, ухудшения - с вероятностью, убывающей с Δ и с падением температуры.
"""

import csv
import math
import os
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np


# Нижняя граница температуры
T_MIN = 1e-8


class ParentChoice(str, Enum):
    """Кто порождает претендентов: текущее решение или элита."""
    CURRENT = "current"
    ELITE = "elite"


@dataclass(frozen=True)
class AnnealState:
    """
    Состояние отжига.

    t_current = max(t_init * alpha ** iteration, t_min).
    """
    t_init: float
    alpha: float
    t_current: float
    iteration: int = 0
    t_min: float = T_MIN

    def __post_init__(self) -> None:
        if not self.t_init > 0:
            raise AnnealingArgumentError(f"Начальная температура должна быть > 0, получено {self.t_init}")
        if not 0 < self.alpha <= 1:
            raise AnnealingArgumentError(f"alpha must lie in (0,1], получено {self.alpha}")
        if not self.t_current > 0:
            raise AnnealingArgumentError("Текущая температура должна быть > 0")
        if self.iteration < 0:
            raise AnnealingArgumentError("Номер итерации не может быть отрицательным")

    @classmethod
    def start(cls, t_init: float, alpha: float, t_min: float = T_MIN) -> "AnnealState":
        """Состояние на нулевой итерации."""
        return cls(t_init, alpha, max(t_init, t_min), 0, t_min)


@dataclass(frozen=True)
class MetropolisDecision:
    """Итог одного испытания Метрополиса."""
    probability: float
    draw: float
    accepted: bool
    delta: Optional[float] = None


def metropolis_probability(f_parent: float, f_challenger: float,
                           temperature: float) -> float:
    """
    Вероятность принять претендента.

    Args:
        f_parent: Приспособленность текущего решения
        f_challenger: Приспособленность претендента
        temperature: Текущая температура (> 0)

    Returns:
        1.0, если претендент не хуже; иначе exp(-Δ / T)

    Raises:
        AnnealingArgumentError: Если T <= 0 или значения не конечны
    """
    if not temperature > 0:
        raise AnnealingArgumentError(f"Температура должна быть > 0, получено {temperature}")
    if not (math.isfinite(f_parent) and math.isfinite(f_challenger)):
        raise AnnealingArgumentError("Значения приспособленности должны быть конечными")
    delta = max(0.0, f_parent - f_challenger)
    if delta == 0.0:
        return 1.0
    return math.exp(-delta / temperature)


def accept(probability: float, rng: np.random.Generator) -> MetropolisDecision:
    """
    Розыгрыш решения: γ ~ U[0, 1), принять, если γ < P.

    Ровно одно обращение к rng на вызов, поэтому решения воспроизводимы
    при фиксированном seed и порядке вызовов.
    """
    if not 0.0 <= probability <= 1.0:
        raise AnnealingArgumentError(f"Вероятность вне [0, 1]: {probability}")
    draw = float(rng.random())
    return MetropolisDecision(probability, draw, draw < probability)


def cool(state: AnnealState) -> AnnealState:
    """
    Один шаг геометрического охлаждения: T <- alpha * T.

    Температура считается в замкнутой форме от t_init, чтобы
    T / t_init = alpha ** n выполнялось без накопления ошибки округления.
    """
    iteration = state.iteration + 1
    t_current = max(state.t_init * state.alpha ** iteration, state.t_min)
    return replace(state, t_current=t_current, iteration=iteration)


def _fmt(value: float) -> str:
    """Кратчайшее точное десятичное представление float."""
    return repr(float(value))


class DecisionLog:
    """
    CSV-журнал решений Метрополиса (decisions.csv), одна строка на итерацию.

    Колонки: iteration, temperature, f_parent, f_best_child, delta,
    probability, draw, accepted.
    """

    COLUMNS = ["iteration", "temperature", "f_parent", "f_best_child",
               "delta", "probability", "draw", "accepted"]

    def __init__(self, path: str) -> None:
        self._path = path
        dir_path = os.path.dirname(path)
        if dir_path:
            os.makedirs(dir_path, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            csv.writer(f).writerow(self.COLUMNS)

    def append(self, iteration: int, temperature: float, f_parent: float,
               f_best_child: float, decision: MetropolisDecision) -> None:
        delta = decision.delta if decision.delta is not None else max(0.0, f_parent - f_best_child)
        with open(self._path, "a", newline="", encoding="utf-8") as f:
            csv.writer(f).writerow([
                iteration, _fmt(temperature), _fmt(f_parent), _fmt(f_best_child),
                _fmt(delta), _fmt(decision.probability), _fmt(decision.draw),
                int(decision.accepted),
            ])

    @property
    def path(self) -> str:
        return self._path


class AnnealingError(Exception):
    """Базовый класс ошибок модуля отжига."""
    pass


class AnnealingArgumentError(AnnealingError, ValueError):
    """Некорректные параметры отжига."""
    pass
