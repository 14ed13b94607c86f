"""
Модуль плотных многослойных перцептронов.

Отвечает за:
- Описание архитектуры сети (MLPSpec)
- Хранение весов (ParamSet) и градиентов (GradSet)
- Пакетный прямой проход с лентой активаций
- Обратный проход (reverse-mode) по ленте
"""

import hashlib
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np


HIDDEN_ACTIVATIONS = ("relu", "leaky_relu", "tanh", "identity")
OUTPUT_ACTIVATIONS = ("sigmoid", "identity", "softmax")

# Зажим вероятностей сигмоиды: log(d) и log(1 - d) всегда конечны
PROB_EPS = 1e-7
DEFAULT_LEAKY_SLOPE = 0.2


@dataclass(frozen=True)
class MLPSpec:
    """Архитектура полносвязной сети."""
    widths: Tuple[int, ...]
    hidden_activations: Tuple[str, ...] = ()
    output_activation: str = "identity"
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    def __post_init__(self) -> None:
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "hidden_activations", tuple(self.hidden_activations))

        if len(widths) < 2:
            raise DimensionError(0, "Сеть должна иметь хотя бы входной и выходной слой")
        for idx, width in enumerate(widths):
            if width < 1:
                raise DimensionError(idx, f"Ширина слоя должна быть >= 1, получено {width}")
        if len(self.hidden_activations) != len(widths) - 2:
            raise DimensionError(
                len(self.hidden_activations),
                f"Ожидалось {len(widths) - 2} скрытых активаций, "
                f"получено {len(self.hidden_activations)}"
            )
        for idx, name in enumerate(self.hidden_activations):
            if name not in HIDDEN_ACTIVATIONS:
                raise DimensionError(idx, f"Неизвестная активация скрытого слоя: {name}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise DimensionError(
                len(widths) - 2, f"Неизвестная выходная активация: {self.output_activation}"
            )

    @classmethod
    def uniform(cls, widths: Tuple[int, ...], activation: str = "leaky_relu",
                output: str = "identity",
                leaky_slope: float = DEFAULT_LEAKY_SLOPE) -> "MLPSpec":
        """
        Сеть с одинаковой активацией на всех скрытых слоях.

        Args:
            widths: Ширины слоёв, включая вход и выход
            activation: Активация скрытых слоёв
            output: Выходная активация
            leaky_slope: Наклон leaky_relu

        Returns:
            Описание архитектуры
        """
        widths = tuple(widths)
        return cls(widths, (activation,) * (len(widths) - 2), output, leaky_slope)

    @property
    def n_layers(self) -> int:
        """Количество аффинных слоёв."""
        return len(self.widths) - 1

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def output_dim(self) -> int:
        return self.widths[-1]

    def activation_of(self, layer: int) -> str:
        """Активация, применяемая после аффинного слоя с индексом layer."""
        if layer == self.n_layers - 1:
            return self.output_activation
        return self.hidden_activations[layer]


def generator_spec(latent_dim: int, data_dim: int, hidden_width: int = 64,
                   hidden_layers: int = 2, activation: str = "leaky_relu") -> MLPSpec:
    """
    Архитектура генератора: латентный вектор -> точка данных.

    Выход генератора всегда identity.
    """
    if hidden_layers < 1:
        raise DimensionError(0, "Генератору нужен хотя бы один скрытый слой")
    widths = (latent_dim,) + (hidden_width,) * hidden_layers + (data_dim,)
    return MLPSpec.uniform(widths, activation, "identity")


def discriminator_spec(data_dim: int, hidden_width: int = 64, hidden_layers: int = 2,
                       activation: str = "leaky_relu") -> MLPSpec:
    """
    Архитектура дискриминатора: точка данных -> вероятность "настоящая".

    Выход дискриминатора всегда sigmoid.
    """
    if hidden_layers < 1:
        raise DimensionError(0, "Дискриминатору нужен хотя бы один скрытый слой")
    widths = (data_dim,) + (hidden_width,) * hidden_layers + (1,)
    return MLPSpec.uniform(widths, activation, "sigmoid")


def classifier_spec(data_dim: int, n_classes: int, hidden_width: int = 32,
                    hidden_layers: int = 2, activation: str = "relu") -> MLPSpec:
    """Архитектура softmax-классификатора."""
    widths = (data_dim,) + (hidden_width,) * hidden_layers + (n_classes,)
    return MLPSpec.uniform(widths, activation, "softmax")


class _LayerArrays:
    """
    Общая часть ParamSet и GradSet: по матрице и вектору на слой.

    Массивы именуются W0, b0, W1, b1, ... в порядке слоёв.
    """

    def __init__(self, weights: List[np.ndarray], biases: List[np.ndarray]) -> None:
        if len(weights) != len(biases):
            raise DimensionError(
                min(len(weights), len(biases)),
                f"Число матриц ({len(weights)}) не совпадает с числом смещений ({len(biases)})"
            )
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    def arrays(self) -> Iterator[Tuple[str, np.ndarray]]:
        """Пары (имя, массив) в каноническом порядке."""
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"W{idx}", w
            yield f"b{idx}", b

    def array_list(self) -> List[np.ndarray]:
        return [arr for _, arr in self.arrays()]

    @property
    def total(self) -> int:
        """Общее количество скалярных значений."""
        return int(sum(arr.size for _, arr in self.arrays()))

    def flat(self) -> np.ndarray:
        """Все значения одним вектором (в порядке arrays())."""
        return np.concatenate([arr.ravel() for _, arr in self.arrays()])

    def checksum(self) -> str:
        """SHA-256 от байтов всех массивов; меняется при любом изменении значений."""
        digest = hashlib.sha256()
        for name, arr in self.arrays():
            digest.update(name.encode("ascii"))
            digest.update(np.ascontiguousarray(arr).tobytes())
        return digest.hexdigest()

    def check_congruent(self, spec: MLPSpec) -> None:
        """
        Проверка согласованности форм со спецификацией.

        Raises:
            DimensionError: С индексом первого несогласованного слоя
        """
        if len(self.weights) != spec.n_layers:
            raise DimensionError(
                min(len(self.weights), spec.n_layers),
                f"Ожидалось {spec.n_layers} слоёв, получено {len(self.weights)}"
            )
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (spec.widths[idx + 1], spec.widths[idx])
            if w.shape != expected:
                raise DimensionError(idx, f"Матрица W{idx}: форма {w.shape}, ожидалось {expected}")
            if b.shape != (expected[0],):
                raise DimensionError(idx, f"Смещение b{idx}: форма {b.shape}, ожидалось ({expected[0]},)")


class ParamSet(_LayerArrays):
    """
    Веса одной сети (генератора, дискриминатора или классификатора).

    Значения не изменяются на месте: обновления возвращают новый ParamSet,
    copy() даёт полностью независимую копию для потомков.
    """

    def copy(self) -> "ParamSet":
        return ParamSet([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def __repr__(self) -> str:
        shapes = ", ".join(f"{name}{arr.shape}" for name, arr in self.arrays())
        return f"ParamSet({shapes})"


class GradSet(_LayerArrays):
    """Градиенты той же формы, что и ParamSet."""

    @classmethod
    def zeros_like(cls, params: ParamSet) -> "GradSet":
        return cls([np.zeros_like(w) for w in params.weights],
                   [np.zeros_like(b) for b in params.biases])

    def __add__(self, other: "GradSet") -> "GradSet":
        return GradSet([a + b for a, b in zip(self.weights, other.weights)],
                       [a + b for a, b in zip(self.biases, other.biases)])


def init_params(spec: MLPSpec, rng: np.random.Generator) -> ParamSet:
    """
    Инициализация весов.

    Веса равномерно в ±sqrt(6 / (fan_in + fan_out)), смещения нулевые.

    Args:
        spec: Архитектура сети
        rng: Источник случайности

    Returns:
        Новый набор параметров
    """
    weights: List[np.ndarray] = []
    biases: List[np.ndarray] = []
    for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ParamSet(weights, biases)


@dataclass
class Tape:
    """
    Лента прямого прохода.

    inputs[l] - вход слоя l, pre[l] - значение до активации,
    outputs - выход последнего слоя (после активации и зажима).
    """
    spec: MLPSpec
    params: ParamSet
    inputs: List[np.ndarray]
    pre: List[np.ndarray]
    outputs: np.ndarray


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Устойчивая форма без переполнения exp
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _activate(name: str, z: np.ndarray, slope: float) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0.0, z, slope * z)
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    if name == "sigmoid":
        return np.clip(_sigmoid(z), PROB_EPS, 1.0 - PROB_EPS)
    if name == "softmax":
        shifted = z - z.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        return exp / exp.sum(axis=1, keepdims=True)
    raise DimensionError(-1, f"Неизвестная активация: {name}")


def _activation_backward(name: str, z: np.ndarray, a: np.ndarray,
                         upstream: np.ndarray, slope: float) -> np.ndarray:
    """Градиент по pre-активации z при известном градиенте по выходу a."""
    if name == "relu":
        return upstream * (z > 0.0)
    if name == "leaky_relu":
        return upstream * np.where(z > 0.0, 1.0, slope)
    if name == "tanh":
        return upstream * (1.0 - a * a)
    if name == "identity":
        return upstream
    if name == "sigmoid":
        # В зоне зажима выход постоянен
        inside = (a > PROB_EPS) & (a < 1.0 - PROB_EPS)
        return upstream * a * (1.0 - a) * inside
    if name == "softmax":
        dot = np.sum(upstream * a, axis=1, keepdims=True)
        return a * (upstream - dot)
    raise DimensionError(-1, f"Неизвестная активация: {name}")


def forward(spec: MLPSpec, params: ParamSet,
            inputs: np.ndarray) -> Tuple[np.ndarray, Tape]:
    """
    Пакетный прямой проход.

    Args:
        spec: Архитектура
        params: Веса, согласованные со spec
        inputs: Матрица (batch, widths[0])

    Returns:
        Кортеж (выход (batch, widths[-1]), лента для backward)

    Raises:
        DimensionError: При несовпадении форм (с индексом слоя)
        NumericError: Если выход содержит NaN/Inf
    """
    params.check_congruent(spec)
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise DimensionError(0, f"Вход формы {x.shape}, ожидалось (*, {spec.input_dim})")

    layer_inputs: List[np.ndarray] = []
    pre: List[np.ndarray] = []
    a = x
    for idx, (w, b) in enumerate(zip(params.weights, params.biases)):
        layer_inputs.append(a)
        z = a @ w.T + b
        pre.append(z)
        a = _activate(spec.activation_of(idx), z, spec.leaky_slope)

    if not np.all(np.isfinite(a)):
        raise NumericError("output", "Выход сети содержит NaN или Inf")
    return a, Tape(spec, params, layer_inputs, pre, a)


def backward(spec: MLPSpec, params: ParamSet, tape: Tape,
             output_grad: np.ndarray) -> Tuple[GradSet, np.ndarray]:
    """
    Обратный проход по ленте.

    Args:
        spec: Архитектура (та же, что при forward)
        params: Веса (тот же объект, что при forward)
        tape: Лента прямого прохода
        output_grad: Частные производные скаляра по каждому выходу

    Returns:
        Кортеж (градиенты параметров, градиент по входу)

    Raises:
        TapeError: Лента получена для другой сети или других весов
        DimensionError: Форма output_grad не совпадает с выходом
    """
    if tape.spec != spec or tape.params is not params:
        raise TapeError("Лента не соответствует переданной сети или весам")
    upstream = np.asarray(output_grad, dtype=np.float64)
    if upstream.shape != tape.outputs.shape:
        raise DimensionError(
            spec.n_layers - 1,
            f"Градиент выхода формы {upstream.shape}, ожидалось {tape.outputs.shape}"
        )

    n_layers = spec.n_layers
    grad_w: List[Optional[np.ndarray]] = [None] * n_layers
    grad_b: List[Optional[np.ndarray]] = [None] * n_layers

    delta = _activation_backward(spec.activation_of(n_layers - 1), tape.pre[-1],
                                 tape.outputs, upstream, spec.leaky_slope)
    for idx in range(n_layers - 1, -1, -1):
        grad_w[idx] = delta.T @ tape.inputs[idx]
        grad_b[idx] = delta.sum(axis=0)
        upstream = delta @ params.weights[idx]
        if idx > 0:
            delta = _activation_backward(spec.activation_of(idx - 1), tape.pre[idx - 1],
                                         tape.inputs[idx], upstream, spec.leaky_slope)

    return GradSet(grad_w, grad_b), upstream


class NDCoreError(Exception):
    """Базовый класс ошибок численного ядра."""
    pass


class DimensionError(NDCoreError, ValueError):
    """Несовпадение размерностей; layer - индекс проблемного слоя."""

    def __init__(self, layer: int, message: str) -> None:
        super().__init__(f"[слой {layer}] {message}")
        self.layer = layer


class TapeError(NDCoreError):
    """Лента устарела или получена для другой сети."""
    pass


class NumericError(NDCoreError, ArithmeticError):
    """Нечисловые значения (NaN/Inf); array_name - имя массива."""

    def __init__(self, array_name: str, message: str) -> None:
        super().__init__(f"{array_name}: {message}")
        self.array_name = array_name
