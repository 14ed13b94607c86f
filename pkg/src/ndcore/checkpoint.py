"""
Текстовый формат чекпоинтов весов.

Формат:
    aggan-params v1 <ширины через '-'> <активации через ','>;leaky_slope=<наклон>
    W0 <rows>x<cols> <значения...>
    b0 <n> <значения...>
    ...

Активации перечисляются для скрытых слоёв и последней - выходная.
Наклон leaky_relu пишется всегда, даже если такого слоя нет; старая
запись leaky_relu:0.2 в списке активаций тоже принимается.
Значения пишутся с 17 значащими цифрами (точное восстановление float64).
"""

import os
from typing import List, Optional, Tuple

import numpy as np

from .mlp import MLPSpec, NDCoreError, ParamSet, DimensionError


MAGIC = "aggan-params"
VERSION = "v1"
SLOPE_KEY = "leaky_slope"


def _format_activations(spec: MLPSpec) -> str:
    names = ",".join(spec.hidden_activations + (spec.output_activation,))
    return f"{names};{SLOPE_KEY}={spec.leaky_slope!r}"


def _parse_slope(value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise CheckpointError(f"Некорректный наклон leaky_relu: {value!r}")


def _parse_header(line: str) -> MLPSpec:
    parts = line.split()
    if len(parts) != 4 or parts[0] != MAGIC:
        raise CheckpointError(f"Некорректный заголовок чекпоинта: {line!r}")
    if parts[1] != VERSION:
        raise CheckpointError(f"Неподдерживаемая версия формата: {parts[1]}")
    try:
        widths = tuple(int(w) for w in parts[2].split("-"))
    except ValueError:
        raise CheckpointError(f"Некорректные ширины слоёв: {parts[2]}")

    activations, _, options = parts[3].partition(";")
    slope = None
    if options:
        key, _, value = options.partition("=")
        if key != SLOPE_KEY:
            raise CheckpointError(f"Неизвестный параметр заголовка: {key!r}")
        slope = _parse_slope(value)

    names: List[str] = []
    for token in activations.split(","):
        if token.startswith("leaky_relu:"):
            if slope is None:
                slope = _parse_slope(token.split(":", 1)[1])
            names.append("leaky_relu")
        elif token:
            names.append(token)
    if not names:
        raise CheckpointError("В заголовке нет активаций")

    kwargs = {} if slope is None else {"leaky_slope": slope}
    try:
        return MLPSpec(widths, tuple(names[:-1]), names[-1], **kwargs)
    except DimensionError as e:
        raise CheckpointError(f"Заголовок описывает некорректную сеть: {e}")


def _expected_names(spec: MLPSpec) -> List[str]:
    return [name for idx in range(spec.n_layers) for name in (f"W{idx}", f"b{idx}")]


def save_params(path: str, spec: MLPSpec, params: ParamSet) -> None:
    """
    Сохранение весов в текстовый чекпоинт.

    Args:
        path: Путь к файлу (директория создаётся при необходимости)
        spec: Архитектура сети
        params: Веса, согласованные со spec
    """
    params.check_congruent(spec)
    lines = [f"{MAGIC} {VERSION} {'-'.join(str(w) for w in spec.widths)} "
             f"{_format_activations(spec)}"]
    for name, arr in params.arrays():
        shape = "x".join(str(s) for s in arr.shape)
        values = " ".join(format(float(v), ".17g") for v in arr.ravel())
        lines.append(f"{name} {shape} {values}")

    dir_path = os.path.dirname(path)
    if dir_path:
        os.makedirs(dir_path, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_params(path: str,
                expected_spec: Optional[MLPSpec] = None) -> Tuple[MLPSpec, ParamSet]:
    """
    Загрузка весов из чекпоинта.

    Массивы обязаны идти в порядке W0, b0, W1, b1, ...

    Args:
        path: Путь к файлу
        expected_spec: Если задан - архитектура в файле обязана совпасть

    Returns:
        Кортеж (архитектура, веса)

    Raises:
        CheckpointError: При повреждённом файле или несовпадении архитектуры
    """
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f if line.strip()]
    if not lines:
        raise CheckpointError(f"Пустой чекпоинт: {path}")

    spec = _parse_header(lines[0])
    if expected_spec is not None and spec != expected_spec:
        raise CheckpointError(
            f"Архитектура чекпоинта {spec.widths} (наклон {spec.leaky_slope!r}) не совпадает "
            f"с ожидаемой {expected_spec.widths} (наклон {expected_spec.leaky_slope!r})"
        )

    expected = _expected_names(spec)
    if len(lines) - 1 != len(expected):
        raise CheckpointError(f"Ожидалось {len(expected)} массивов, найдено {len(lines) - 1}")

    arrays: List[np.ndarray] = []
    for line_no, (line, name) in enumerate(zip(lines[1:], expected), start=2):
        parts = line.split()
        if len(parts) < 2:
            raise CheckpointError(f"Строка {line_no}: нет имени или формы массива")
        if parts[0] != name:
            raise CheckpointError(f"Строка {line_no}: ожидался массив {name}, найден {parts[0]}")
        try:
            shape = tuple(int(s) for s in parts[1].split("x"))
            values = np.array([float(v) for v in parts[2:]], dtype=np.float64)
        except ValueError as e:
            raise CheckpointError(f"Строка {line_no}: {e}")
        if values.size != int(np.prod(shape)):
            raise CheckpointError(
                f"Строка {line_no}: {name} ожидает {int(np.prod(shape))} значений, "
                f"найдено {values.size}"
            )
        arrays.append(values.reshape(shape))

    params = ParamSet(arrays[0::2], arrays[1::2])
    try:
        params.check_congruent(spec)
    except DimensionError as e:
        raise CheckpointError(f"Формы массивов не согласованы с заголовком: {e}")
    return spec, params


class CheckpointError(NDCoreError):
    """Ошибка чтения или проверки чекпоинта."""
    pass
