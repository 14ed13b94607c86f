"""
Конфигурация экспериментов в YAML.

Структура файла:
    kind: train | bench | theory | sweep
    seed: 0             # базовый seed
    seeds: 5            # число повторов или явный список
    out: runs/bench     # директория запуска
    dataset: {...}      # DatasetSection
    trainer: {...}      # TrainerConfig (g_optimizer/d_optimizer - вложенные секции)
    bench: {...}        # BenchSection
    classifier: {...}   # ClassifierConfig
    sweep: {...}        # SweepSection
    theory: {...}       # TheorySection (chain - вложенная ChainConfig)

Неизвестные ключи отклоняются с номером строки; все значения по
умолчанию материализуются в serialize().
"""

import dataclasses
import hashlib
import os
import re
import typing
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import yaml

from bench import METHODS, ClassifierConfig
from theorysim import ChainConfig
from trainer import TrainerConfig


KINDS = ("train", "bench", "theory", "sweep")
DATASET_KINDS = ("ring", "grid", "rings", "csv", "digits")
LANDSCAPE_KINDS = ("line", "ring", "star", "rugged", "trap", "file")
BENCH_CLASSES = ("pair", "all")


@dataclass(frozen=True)
class DatasetSection:
    """
    Источник данных.

    ring/grid - одна смесь (n - общее число точек);
    rings - interleaved_rings (n - точек на класс);
    csv/digits - файл path.
    """
    kind: str = "ring"
    k: int = 8
    radius: float = 2.0
    sigma: float = 0.04
    side: int = 5
    spacing: float = 2.0
    n: int = 200
    n_classes: int = 2
    path: Optional[str] = None
    majority: int = 0
    minority: int = 1

    def __post_init__(self) -> None:
        if self.kind not in DATASET_KINDS:
            raise ValueError(f"dataset.kind должен быть одним из {DATASET_KINDS}")
        if self.kind in ("csv", "digits") and not self.path:
            raise ValueError(f"dataset.kind={self.kind} требует path")
        if self.n < 1 or self.k < 1 or self.side < 1:
            raise ValueError("n, k и side должны быть >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma должна быть > 0")


@dataclass(frozen=True)
class BenchSection:
    """classes: pair - только (majority, minority); all - весь каталог набора."""
    methods: Tuple[str, ...] = ("cn", "os_cn", "aggan")
    irs: Tuple[float, ...] = (10.0, 100.0)
    coverage_samples: int = 8000
    min_per_mode: int = 20
    test_fraction: float = 0.2
    classes: str = "pair"

    def __post_init__(self) -> None:
        if self.classes not in BENCH_CLASSES:
            raise ValueError(f"classes должен быть одним из {BENCH_CLASSES}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"Неизвестные методы {unknown} (доступны: {', '.join(METHODS)})")
        if not self.methods or not self.irs:
            raise ValueError("methods и irs не могут быть пустыми")
        if any(not ir >= 1 for ir in self.irs):
            raise ValueError("Каждый IR должен быть >= 1")


@dataclass(frozen=True)
class SweepSection:
    """Сетка (t_init x alpha); ir задан - ячейка оценивается стендом aggan."""
    t_init: Tuple[float, ...] = (100.0, 1000.0, 10000.0)
    alpha: Tuple[float, ...] = (0.99, 0.999)
    ir: Optional[float] = None

    def __post_init__(self) -> None:
        if any(not t > 0 for t in self.t_init):
            raise ValueError("Все t_init должны быть > 0")
        if any(not 0 < a <= 1 for a in self.alpha):
            raise ValueError("alpha must lie in (0,1]")

    def cells(self) -> Tuple[Tuple[float, float], ...]:
        return tuple((t, a) for t in self.t_init for a in self.alpha)


@dataclass(frozen=True)
class TheorySection:
    """
    Кампания симулятора цепи.

    landscape_seed - seed генерации ландшафта (None - производный от seed запуска);
    budgets - вложенные бюджеты для кривой попаданий (пусто - только chain.budget);
    greedy_landscapes - число ловушек для парного сравнения с жадной цепью (0 - не сравнивать).
    """
    landscape: str = "rugged"
    n_states: int = 64
    n_chords: int = 32
    landscape_seed: Optional[int] = None
    path: Optional[str] = None
    runs: int = 100
    budgets: Tuple[int, ...] = ()
    greedy_landscapes: int = 0
    chain: ChainConfig = field(default_factory=ChainConfig)

    def __post_init__(self) -> None:
        if self.landscape not in LANDSCAPE_KINDS:
            raise ValueError(f"theory.landscape должен быть одним из {LANDSCAPE_KINDS}")
        if self.landscape == "file" and not self.path:
            raise ValueError("theory.landscape=file требует path")
        if self.runs < 1:
            raise ValueError("runs должно быть >= 1")
        if any(b < 0 for b in self.budgets):
            raise ValueError("Бюджеты не могут быть отрицательными")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    seeds: Tuple[int, ...] = (0,)
    out: str = "runs"
    dataset: DatasetSection = field(default_factory=DatasetSection)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    bench: BenchSection = field(default_factory=BenchSection)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    sweep: SweepSection = field(default_factory=SweepSection)
    theory: TheorySection = field(default_factory=TheorySection)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind должен быть одним из {KINDS}")
        if not self.seeds:
            raise ValueError("Список seeds не может быть пустым")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds содержит повторы")
        if self.kind == "sweep" and not self.sweep.cells():
            raise ValueError("Сетка sweep пуста")


def derive_seed(base: int, index: int, component: str) -> int:
    """Seed компонента: sha256(base, index, component), 63 бита."""
    digest = hashlib.sha256(f"{base}:{index}:{component}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def parse_seeds(value: Any) -> Tuple[int, ...]:
    """Число n -> (0, ..., n-1); список -> кортеж; строка '0,2,5' или '5'."""
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        if len(parts) == 1:
            value = int(parts[0])
        else:
            value = [int(p) for p in parts]
    if isinstance(value, bool):
        raise ValueError("seeds должно быть числом или списком")
    if isinstance(value, int):
        if value < 1:
            raise ValueError("Число seeds должно быть >= 1")
        return tuple(range(value))
    if isinstance(value, (list, tuple)):
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ValueError("seeds должен содержать целые числа")
        return tuple(value)
    raise ValueError("seeds должно быть числом или списком")


# --- Разбор с диагностикой строк ---

def _line_index(node: yaml.Node, prefix: Tuple[str, ...] = ()) -> Dict[Tuple[str, ...], int]:
    """Номер строки (с 1) для каждого пути ключей в YAML-дереве."""
    lines: Dict[Tuple[str, ...], int] = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (str(key_node.value),)
            lines[path] = key_node.start_mark.line + 1
            lines.update(_line_index(value_node, path))
    return lines


def _strip_optional(hint: Any) -> Tuple[Any, bool]:
    if typing.get_origin(hint) is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if len(args) == 1:
            return args[0], True
    return hint, False


def _coerce(value: Any, hint: Any, path: Tuple[str, ...], lines: Dict[Tuple[str, ...], int]) -> Any:
    hint, optional = _strip_optional(hint)
    if value is None:
        if optional:
            return None
        raise ConfigError("значение не может быть пустым", ".".join(path), lines.get(path))

    if dataclasses.is_dataclass(hint):
        return _build(hint, value, path, lines)
    if isinstance(hint, type) and issubclass(hint, Enum):
        try:
            return hint(value)
        except ValueError:
            allowed = ", ".join(str(m.value) for m in hint)
            raise ConfigError(f"недопустимое значение '{value}' (допустимы: {allowed})",
                              ".".join(path), lines.get(path))
    if typing.get_origin(hint) in (tuple, Tuple):
        item_hint = typing.get_args(hint)[0]
        items = value if isinstance(value, (list, tuple)) else [value]
        return tuple(_coerce(v, item_hint, path, lines) for v in items)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError("ожидалось true/false", ".".join(path), lines.get(path))
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"ожидалось целое число, получено {value!r}", ".".join(path), lines.get(path))
        return value
    if hint is float:
        if isinstance(value, str):
            # PyYAML читает 1e-8 без точки как строку
            try:
                return float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"ожидалось число, получено {value!r}", ".".join(path), lines.get(path))
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"ожидалась строка, получено {value!r}", ".".join(path), lines.get(path))
        return value
    return value


def _build(cls: type, mapping: Any, path: Tuple[str, ...], lines: Dict[Tuple[str, ...], int]) -> Any:
    where = ".".join(path) or "<корень>"
    if not isinstance(mapping, dict):
        raise ConfigError(f"секция {where} должна быть словарём", where, lines.get(path))

    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs: Dict[str, Any] = {}
    for key, value in mapping.items():
        key_path = path + (str(key),)
        if key not in known:
            raise ConfigError(f"неизвестный ключ в секции {where}", ".".join(key_path), lines.get(key_path))
        if cls is ExperimentConfig and key == "seeds":
            try:
                kwargs[key] = parse_seeds(value)
            except ValueError as e:
                raise ConfigError(str(e), "seeds", lines.get(key_path))
            continue
        kwargs[key] = _coerce(value, hints[key], key_path, lines)

    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        for name in kwargs:
            if re.search(rf"\b{re.escape(name)}\b", str(e)):
                key_path = path + (name,)
                raise ConfigError(str(e), ".".join(key_path), lines.get(key_path))
        raise ConfigError(str(e), where, lines.get(path))


def parse_config_text(text: str, kind: Optional[str] = None) -> ExperimentConfig:
    """
    Разбор конфигурации из строки.

    Args:
        text: YAML-текст
        kind: Вид эксперимента из подкоманды; обязан совпасть с kind в файле

    Raises:
        ConfigError: Синтаксис, неизвестный ключ или недопустимое значение
    """
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigError(f"ошибка синтаксиса YAML: {problem}", None, line)

    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("конфигурация должна быть словарём", None, 1)
    lines = _line_index(node) if node is not None else {}

    if kind is not None:
        if "kind" in data and data["kind"] != kind:
            raise ConfigError(f"конфигурация для '{data['kind']}', а запрошен '{kind}'",
                              "kind", lines.get(("kind",)))
        data = {"kind": kind, **data}
    if "kind" not in data:
        raise ConfigError("обязательный ключ отсутствует", "kind", None)
    return _build(ExperimentConfig, data, (), lines)


def parse_config(path: str, kind: Optional[str] = None) -> ExperimentConfig:
    """
    Загрузка и проверка конфигурации из файла.

    Файлы, на которые ссылается конфигурация, обязаны существовать.
    """
    if not os.path.exists(path):
        raise ConfigError(f"файл конфигурации не найден: {path}")
    with open(path, "r", encoding="utf-8") as f:
        config = parse_config_text(f.read(), kind)
    check_references(config, base_dir=os.path.dirname(os.path.abspath(path)))
    return config


def resolve_path(path: str, base_dir: str) -> str:
    return path if os.path.isabs(path) or os.path.exists(path) else os.path.join(base_dir, path)


def check_references(config: ExperimentConfig, base_dir: str = ".") -> None:
    """Проверка существования файлов, используемых выбранным видом эксперимента."""
    if config.kind in ("train", "bench", "sweep") and config.dataset.path:
        if not os.path.exists(resolve_path(config.dataset.path, base_dir)):
            raise ConfigError(f"файл не найден: {config.dataset.path}", "dataset.path")
    if config.kind == "theory" and config.theory.path:
        if not os.path.exists(resolve_path(config.theory.path, base_dir)):
            raise ConfigError(f"файл не найден: {config.theory.path}", "theory.path")


def _plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def serialize(config: ExperimentConfig) -> Dict[str, Any]:
    """Полный словарь конфигурации со всеми значениями по умолчанию."""
    return _plain(config)


def dump_config(config: ExperimentConfig) -> str:
    """YAML-представление; parse_config_text(dump_config(c)) == c."""
    return yaml.safe_dump(serialize(config), sort_keys=False, allow_unicode=True)


class ExperimentError(Exception):
    """Базовый класс ошибок оркестрации экспериментов."""
    pass


class ConfigError(ExperimentError, ValueError):
    """Ошибка конфигурации; key и line указывают место, если известны."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None) -> None:
        location = []
        if line is not None:
            location.append(f"строка {line}")
        if key:
            location.append(f"ключ '{key}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
        self.message = message


class RunDirectoryExistsError(ExperimentError):
    """Директория запуска уже содержит результаты, а перезапись не разрешена."""
    pass
