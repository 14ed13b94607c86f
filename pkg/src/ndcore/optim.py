"""
Модуль оптимизаторов.

Содержит:
- OptState: состояние SGD/Adam (моменты, счётчик шагов)
- opt_step(): один шаг оптимизации, возвращающий новые веса и состояние
- grad_norm(): глобальная L2-норма градиентов
"""

from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from .mlp import GradSet, NumericError, ParamSet


OPTIMIZER_KINDS = ("sgd", "adam")


@dataclass(frozen=True)
class OptState:
    """
    Состояние оптимизатора.

    Моменты Adam хранятся по одному массиву на каждый массив параметров
    (в порядке ParamSet.arrays()); для SGD списки пустые.
    """
    kind: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moments: Tuple[np.ndarray, ...] = field(default=(), compare=False)
    second_moments: Tuple[np.ndarray, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.kind not in OPTIMIZER_KINDS:
            raise ValueError(f"Неизвестный оптимизатор: {self.kind}")
        if self.step < 0:
            raise ValueError("Счётчик шагов не может быть отрицательным")


def init_opt_state(params: ParamSet, kind: str = "adam", lr: float = 1e-3,
                   beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8) -> OptState:
    """
    Создание состояния оптимизатора с нулевыми моментами.

    Args:
        params: Параметры, под которые создаются моменты
        kind: "sgd" или "adam"
        lr: Шаг обучения
        beta1, beta2, eps: Гиперпараметры Adam

    Returns:
        Начальное состояние (step = 0)
    """
    if kind == "adam":
        zeros = tuple(np.zeros_like(arr) for arr in params.array_list())
        return OptState(kind, lr, beta1, beta2, eps, 0, zeros,
                        tuple(z.copy() for z in zeros))
    return OptState(kind, lr, beta1, beta2, eps, 0)


def opt_step(params: ParamSet, grads: GradSet,
             opt: OptState) -> Tuple[ParamSet, OptState]:
    """
    Один шаг оптимизации.

    Args:
        params: Текущие веса (не изменяются)
        grads: Градиенты той же формы
        opt: Состояние оптимизатора

    Returns:
        Кортеж (новые веса, новое состояние со step + 1)

    Raises:
        NumericError: Если градиент содержит NaN/Inf (с именем массива)
    """
    named_params = list(params.arrays())
    named_grads = list(grads.arrays())
    if len(named_params) != len(named_grads):
        raise NumericError("grads", "Набор градиентов не согласован с параметрами")
    for (name, p), (_, g) in zip(named_params, named_grads):
        if p.shape != g.shape:
            raise NumericError(name, f"форма градиента {g.shape} != {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(name, "градиент содержит NaN или Inf")

    step = opt.step + 1
    new_arrays: List[np.ndarray] = []

    if opt.kind == "sgd":
        for (_, p), (_, g) in zip(named_params, named_grads):
            new_arrays.append(p - opt.lr * g)
        new_opt = replace(opt, step=step)
    else:
        first = opt.first_moments or tuple(np.zeros_like(p) for _, p in named_params)
        second = opt.second_moments or tuple(np.zeros_like(p) for _, p in named_params)
        new_first: List[np.ndarray] = []
        new_second: List[np.ndarray] = []
        bias1 = 1.0 - opt.beta1 ** step
        bias2 = 1.0 - opt.beta2 ** step
        for (_, p), (_, g), m, v in zip(named_params, named_grads, first, second):
            m_new = opt.beta1 * m + (1.0 - opt.beta1) * g
            v_new = opt.beta2 * v + (1.0 - opt.beta2) * g * g
            m_hat = m_new / bias1
            v_hat = v_new / bias2
            new_arrays.append(p - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps))
            new_first.append(m_new)
            new_second.append(v_new)
        new_opt = replace(opt, step=step, first_moments=tuple(new_first),
                          second_moments=tuple(new_second))

    return ParamSet(new_arrays[0::2], new_arrays[1::2]), new_opt


def grad_norm(grads: GradSet) -> float:
    """Глобальная L2-норма по всем элементам всех массивов."""
    total = 0.0
    for _, g in grads.arrays():
        total += float(np.sum(g * g))
    return float(np.sqrt(total))
