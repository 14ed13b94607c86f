"""
Покрытие мод: оракул качества генератора по известной смеси.

Точка высокого качества - ближе 3 sigma к какому-либо среднему.
Мода покрыта, если к ней (по ближайшему среднему) отнесено не меньше
min_per_mode точек высокого качества. Симметризованная KL считается
на сетке 64x64 над рамкой смеси, расширенной на 3 sigma: массы ячеек
истинной смеси точные (нормальная CDF), к обеим гистограммам
добавляется по одному псевдонаблюдению на ячейку.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import norm

from .datasets import BenchArgumentError, MixtureSpec


HQ_SIGMAS = 3.0
GRID_BINS = 64
DEFAULT_MIN_PER_MODE = 20


@dataclass(frozen=True)
class CoverageReport:
    covered: int
    hq_ratio: float
    sym_kl: float
    per_mode: Tuple[int, ...]


def assign_modes(samples: np.ndarray, spec: MixtureSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Индекс ближайшего среднего и расстояние до него для каждой точки."""
    distances = cdist(samples, spec.means)
    nearest = np.argmin(distances, axis=1)
    return nearest, distances[np.arange(len(samples)), nearest]


def _cell_masses(spec: MixtureSpec, edges: Tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    masses = np.zeros((len(edges[0]) - 1, len(edges[1]) - 1))
    for mean, weight in zip(spec.means, spec.weights):
        px = np.diff(norm.cdf(edges[0], loc=mean[0], scale=spec.sigma))
        py = np.diff(norm.cdf(edges[1], loc=mean[1], scale=spec.sigma))
        masses += weight * np.outer(px, py)
    return masses


def symmetric_kl(samples: np.ndarray, spec: MixtureSpec, bins: int = GRID_BINS) -> float:
    """
    KL(p||q) + KL(q||p) между истинной смесью и гистограммой точек.

    Определена для двумерных смесей; точки вне рамки не учитываются.
    """
    if spec.dim != 2:
        return float("nan")
    low, high = spec.bounding_box(HQ_SIGMAS)
    edges = (np.linspace(low[0], high[0], bins + 1), np.linspace(low[1], high[1], bins + 1))
    counts, _, _ = np.histogram2d(samples[:, 0], samples[:, 1], bins=edges)

    n = len(samples)
    masses = _cell_masses(spec, edges)
    masses = masses / masses.sum()
    cells = bins * bins
    p = (n * masses + 1.0) / (n + cells)
    q = (counts + 1.0) / (counts.sum() + cells)
    return float(np.sum((p - q) * np.log(p / q)))


def mode_coverage(samples: np.ndarray, spec: MixtureSpec,
                  min_per_mode: int = DEFAULT_MIN_PER_MODE,
                  bins: int = GRID_BINS) -> CoverageReport:
    """
    Число покрытых мод, доля точек высокого качества и симметризованная KL.

    Raises:
        BenchArgumentError: Для пустой выборки или несовпадающей размерности
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] == 0 or samples.size == 0:
        raise BenchArgumentError("Выборка для оценки покрытия пуста")
    if samples.shape[1] != spec.dim:
        raise BenchArgumentError(f"Точки размерности {samples.shape[1]}, смесь - {spec.dim}")

    nearest, distance = assign_modes(samples, spec)
    high_quality = distance <= HQ_SIGMAS * spec.sigma
    per_mode = np.bincount(nearest[high_quality], minlength=spec.k)
    return CoverageReport(
        covered=int(np.sum(per_mode >= min_per_mode)),
        hq_ratio=float(np.mean(high_quality)),
        sym_kl=symmetric_kl(samples, spec, bins),
        per_mode=tuple(int(c) for c in per_mode),
    )
