"""
Наборы данных стенда: смеси гауссиан, CSV-файлы, стандартизация.

Синтетика:
    - gaussian_ring: k мод на окружности
    - gaussian_grid: side x side мод на решётке
    - interleaved_rings: по кольцу на класс, моды классов чередуются

Файлы: CSV с заголовком f0,...,f{d-1},label (pandas).
"""

import hashlib
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.preprocessing import StandardScaler


logger = logging.getLogger(__name__)

DIGITS_FEATURES = 64


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    """Изотропная гауссова смесь: средние (k, d), общая sigma, веса."""
    means: np.ndarray
    sigma: float
    weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        if means.shape[0] < 1:
            raise DatasetError("Смесь должна содержать хотя бы одну компоненту")
        if not self.sigma > 0:
            raise DatasetError(f"sigma должна быть > 0, получено {self.sigma}")
        k = means.shape[0]
        weights = np.full(k, 1.0 / k) if self.weights is None else np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (k,) or np.any(weights < 0) or not np.isclose(weights.sum(), 1.0):
            raise DatasetError("Веса смеси должны быть неотрицательны и давать в сумме 1")
        means.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weights", weights)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def bounding_box(self, pad_sigmas: float = 3.0) -> Tuple[np.ndarray, np.ndarray]:
        """Покомпонентные границы средних, расширенные на pad_sigmas * sigma."""
        pad = pad_sigmas * self.sigma
        return self.means.min(axis=0) - pad, self.means.max(axis=0) + pad

    def sample(self, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """n точек и номера их мод; мода каждой точки выбирается по весам."""
        modes = rng.choice(self.k, size=n, p=self.weights)
        points = self.means[modes] + self.sigma * rng.standard_normal((n, self.dim))
        return points, modes


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Размеченный набор данных.

    classes - каталог классов; метка каждой строки принадлежит каталогу.
    Массивы после создания доступны только для чтения.
    """
    features: np.ndarray
    labels: np.ndarray
    classes: Tuple[int, ...] = ()
    source: str = "synthetic"

    def __post_init__(self) -> None:
        features = np.atleast_2d(np.asarray(self.features, dtype=np.float64)).copy()
        labels = np.asarray(self.labels, dtype=np.int64).ravel().copy()
        if features.shape[0] < 1:
            raise DatasetError("Набор данных пуст")
        if labels.shape[0] != features.shape[0]:
            raise DatasetError(f"Строк признаков {features.shape[0]}, меток {labels.shape[0]}")
        classes = tuple(int(c) for c in self.classes) or tuple(int(c) for c in np.unique(labels))
        unknown = set(np.unique(labels).tolist()) - set(classes)
        if unknown:
            raise DatasetError(f"Метки вне каталога классов: {sorted(unknown)}")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", classes)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def counts(self) -> Dict[int, int]:
        """Число строк каждого класса каталога (включая отсутствующие)."""
        return {c: int(np.sum(self.labels == c)) for c in self.classes}

    def of_class(self, label: int) -> np.ndarray:
        return self.features[self.labels == label]

    def take(self, indices: Sequence[int], source: Optional[str] = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.classes, source or self.source)

    def extend(self, features: np.ndarray, label: int) -> "Dataset":
        """Новый набор с добавленными строками класса label."""
        if len(features) == 0:
            return self
        return Dataset(
            np.vstack([self.features, features]),
            np.concatenate([self.labels, np.full(len(features), label)]),
            self.classes,
            self.source,
        )

    def checksum(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.features.tobytes())
        digest.update(self.labels.tobytes())
        return digest.hexdigest()


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ring_spec(k: int, radius: float, sigma: float, phase: float = 0.0) -> MixtureSpec:
    """Смесь из k мод на окружности радиуса radius, первая мода под углом phase."""
    if k < 1:
        raise DatasetError("k должно быть >= 1")
    angles = phase + 2.0 * np.pi * np.arange(k) / k
    return MixtureSpec(np.column_stack([radius * np.cos(angles), radius * np.sin(angles)]), sigma)


def grid_spec(side: int, spacing: float, sigma: float) -> MixtureSpec:
    """Смесь side x side мод на решётке с центром в начале координат."""
    if side < 1:
        raise DatasetError("side должно быть >= 1")
    coords = (np.arange(side) - (side - 1) / 2.0) * spacing
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    return MixtureSpec(np.column_stack([xx.ravel(), yy.ravel()]), sigma)


def gaussian_ring(k: int, radius: float, sigma: float, n: int, seed=0,
                  label: int = 0) -> Tuple[Dataset, MixtureSpec]:
    """
    n точек кольцевой смеси; все строки получают метку label.

    Returns:
        (Dataset, MixtureSpec) - данные и истинная смесь для оракула покрытия
    """
    spec = ring_spec(k, radius, sigma)
    points, _ = spec.sample(n, _rng(seed))
    return Dataset(points, np.full(n, label), (label,), f"ring(k={k},r={radius},sigma={sigma})"), spec


def gaussian_grid(side: int, spacing: float, sigma: float, n: int, seed=0,
                  label: int = 0) -> Tuple[Dataset, MixtureSpec]:
    """n точек решётчатой смеси side x side."""
    spec = grid_spec(side, spacing, sigma)
    points, _ = spec.sample(n, _rng(seed))
    return Dataset(points, np.full(n, label), (label,), f"grid(side={side},spacing={spacing})"), spec


def interleaved_rings(n_classes: int, k: int, radius: float, sigma: float,
                      n_per_class: int, seed=0) -> Tuple[Dataset, Dict[int, MixtureSpec]]:
    """
    Многоклассовая задача: у каждого класса своё кольцо из k мод.

    Кольца совпадают по радиусу и повёрнуты друг относительно друга
    на 2*pi / (k * n_classes), так что моды разных классов чередуются.
    """
    if n_classes < 2:
        raise DatasetError("Нужно хотя бы 2 класса")
    rng = _rng(seed)
    specs: Dict[int, MixtureSpec] = {}
    features, labels = [], []
    for c in range(n_classes):
        spec = ring_spec(k, radius, sigma, phase=2.0 * np.pi * c / (k * n_classes))
        points, _ = spec.sample(n_per_class, rng)
        specs[c] = spec
        features.append(points)
        labels.append(np.full(n_per_class, c))
    dataset = Dataset(np.vstack(features), np.concatenate(labels), tuple(range(n_classes)),
                      f"rings(classes={n_classes},k={k})")
    return dataset, specs


def load_dataset_csv(path: str, expected_features: Optional[int] = None) -> Dataset:
    """
    Загрузка CSV с заголовком f0,...,f{d-1},label.

    Raises:
        DatasetError: Если файла нет, заголовок неверен или есть пропуски
    """
    if not os.path.exists(path):
        raise DatasetError(f"Файл набора данных не найден: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(f"Не удалось прочитать {path}: {e}")

    columns = list(frame.columns)
    d = len(columns) - 1
    expected = [f"f{j}" for j in range(d)] + ["label"]
    if d < 1 or columns != expected:
        raise DatasetError(f"{path}: ожидался заголовок f0,...,f{{d-1}},label")
    if expected_features is not None and d != expected_features:
        raise DatasetError(f"{path}: ожидалось {expected_features} признаков, найдено {d}")
    if frame.isnull().values.any():
        raise DatasetError(f"{path}: есть пропущенные значения")

    dataset = Dataset(frame[expected[:-1]].to_numpy(dtype=np.float64),
                      frame["label"].to_numpy(dtype=np.int64),
                      source=f"file:{os.path.basename(path)}")
    logger.info("Загружено %d строк, %d признаков, классы: %s", dataset.n, d, dataset.classes)
    return dataset


def load_digits_csv(path: str) -> Dataset:
    """Рукописные цифры 8x8: тот же формат CSV с 64 признаками."""
    return load_dataset_csv(path, expected_features=DIGITS_FEATURES)


def save_dataset_csv(path: str, dataset: Dataset) -> None:
    dir_path = os.path.dirname(path)
    if dir_path:
        os.makedirs(dir_path, exist_ok=True)
    frame = pd.DataFrame(dataset.features, columns=[f"f{j}" for j in range(dataset.dim)])
    frame["label"] = dataset.labels
    frame.to_csv(path, index=False, float_format="%.17g")


@dataclass
class Standardizer:
    """Стандартизация признаков, обученная на обучающей выборке."""
    scaler: StandardScaler = field(default_factory=StandardScaler)

    @classmethod
    def fit(cls, dataset: Dataset) -> "Standardizer":
        return cls(StandardScaler().fit(dataset.features))

    def transform(self, dataset: Dataset) -> Dataset:
        return Dataset(self.scaler.transform(dataset.features), dataset.labels,
                       dataset.classes, dataset.source)

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        return self.scaler.transform(points)

    def inverse_points(self, points: np.ndarray) -> np.ndarray:
        if len(points) == 0:
            return np.zeros((0, self.scaler.n_features_in_))
        return self.scaler.inverse_transform(points)


class BenchError(Exception):
    """Базовый класс ошибок стенда."""
    pass


class BenchArgumentError(BenchError, ValueError):
    """Некорректные аргументы операций стенда."""
    pass


class DatasetError(BenchError, ValueError):
    """Некорректный набор данных или файл."""
    pass
