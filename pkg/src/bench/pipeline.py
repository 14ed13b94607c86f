"""
Одна ячейка стенда: (метод, IR, seed) -> строка метрик.

Методы:
    - cn: классификатор на несбалансированной выборке
    - os_cn: случайное досэмплирование
    - fixed_gan, egan, aggan: досэмплирование генератором, обученным
      соответствующим режимом тренера на миноритарных строках
"""

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ganlosses import MutationObjective
from trainer import TrainMode, TrainResult, TrainerConfig, convergence_iteration, train
from .classifier import ClassifierConfig, train_classifier
from .coverage import DEFAULT_MIN_PER_MODE, mode_coverage
from .datasets import BenchArgumentError, Dataset, MixtureSpec, Standardizer
from .imbalance import make_imbalanced_multiclass
from .metrics import Metrics, evaluate
from .oversampling import multiclass_balance, oversample_with_generator, random_oversample


logger = logging.getLogger(__name__)

METHODS = ("cn", "os_cn", "fixed_gan", "egan", "aggan")
GAN_MODES = {"fixed_gan": TrainMode.FIXED, "egan": TrainMode.EGAN, "aggan": TrainMode.AGGAN}

METRIC_COLUMNS = ["method", "ir", "seed", "accuracy", "prec_min", "rec_min", "f1_min",
                  "prec_maj", "rec_maj", "f1_maj", "modes", "hq_ratio", "sym_kl"]


@dataclass(frozen=True, eq=False)
class BenchTask:
    """
    Задача стенда: данные, мажоритарный класс и отчётный миноритарный класс.

    mixtures - истинные смеси классов (для синтетики), используются
    оракулом покрытия в исходных координатах.
    classes - классы задачи; пусто - только пара (majority, minority).
    """
    name: str
    dataset: Dataset
    majority: int
    minority: int
    mixtures: Mapping[int, MixtureSpec] = field(default_factory=dict)
    classes: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for label in (self.majority, self.minority):
            if label not in self.dataset.classes:
                raise BenchArgumentError(f"Класс {label} отсутствует в задаче {self.name}")
        if self.majority == self.minority:
            raise BenchArgumentError("Мажоритарный и миноритарный классы должны различаться")
        unknown = [c for c in self.classes if c not in self.dataset.classes]
        if unknown:
            raise BenchArgumentError(f"Классы {unknown} отсутствуют в задаче {self.name}")
        if self.classes and not {self.majority, self.minority} <= set(self.classes):
            raise BenchArgumentError("classes должен содержать мажоритарный и миноритарный классы")

    @property
    def task_classes(self) -> Tuple[int, ...]:
        """Классы задачи в порядке каталога набора."""
        chosen = set(self.classes) if self.classes else {self.majority, self.minority}
        return tuple(c for c in self.dataset.classes if c in chosen)


@dataclass(frozen=True)
class CellResult:
    method: str
    ir: float
    seed: int
    metrics: Metrics
    f_elite: Optional[float] = None
    convergence_iteration: Optional[int] = None

    def row(self, minority: int, majority: int) -> Dict[str, object]:
        m = self.metrics
        return {
            "method": self.method,
            "ir": self.ir,
            "seed": self.seed,
            "accuracy": m.accuracy,
            "prec_min": m.precision[minority],
            "rec_min": m.recall[minority],
            "f1_min": m.f1[minority],
            "prec_maj": m.precision[majority],
            "rec_maj": m.recall[majority],
            "f1_maj": m.f1[majority],
            "modes": m.covered_modes,
            "hq_ratio": m.hq_ratio,
            "sym_kl": m.sym_kl,
        }


@dataclass(frozen=True)
class CellSeeds:
    """Seed компонентов ячейки: разбиение, GAN, синтетика, классификатор."""
    split: int
    gan: int
    sampling: int
    classifier: int

    @classmethod
    def from_seed(cls, seed: int) -> "CellSeeds":
        children = np.random.SeedSequence(seed).spawn(4)
        return cls(*(int(child.generate_state(1)[0]) for child in children))


def _train_generators(method: str, train_set: Dataset, majority: int, trainer_cfg: TrainerConfig,
                      gan_seed: int, run_dir: Optional[str]) -> Dict[int, TrainResult]:
    objective = trainer_cfg.fixed_objective
    if GAN_MODES[method] is TrainMode.FIXED and objective is None:
        objective = MutationObjective.MINIMAX
    cfg = replace(trainer_cfg, mode=GAN_MODES[method], fixed_objective=objective, seed=gan_seed)
    counts = train_set.counts()
    target = max(counts.values())
    results: Dict[int, TrainResult] = {}
    for label in train_set.classes:
        if label == majority or counts[label] >= target:
            continue
        class_dir = os.path.join(run_dir, f"class_{label}") if run_dir else None
        results[label] = train(replace(cfg, seed=cfg.seed + label), train_set.of_class(label), class_dir)
    return results


def run_cell(task: BenchTask, method: str, ir: float, seed: int,
             trainer_cfg: TrainerConfig, classifier_cfg: ClassifierConfig,
             coverage_samples: int = 8000, min_per_mode: int = DEFAULT_MIN_PER_MODE,
             test_fraction: float = 0.2, run_dir: Optional[str] = None) -> CellResult:
    """
    Прогон одной ячейки.

    Тестовая выборка зависит только от seed; признаки стандартизуются
    по обучающей выборке, генераторы обучаются в стандартизованных
    координатах, покрытие мод считается в исходных.

    Args:
        task: Задача стенда
        method: Один из METHODS
        ir: Коэффициент дисбаланса
        seed: Seed ячейки
        trainer_cfg: Базовая конфигурация тренера (режим и seed подменяются)
        classifier_cfg: Конфигурация классификатора (seed подменяется)
        coverage_samples: Сколько точек генерировать для оракула покрытия
        min_per_mode: Порог покрытия моды
        test_fraction: Доля сбалансированного теста
        run_dir: Директория для файлов тренера (None - не писать)

    Returns:
        CellResult
    """
    if method not in METHODS:
        raise BenchArgumentError(f"Неизвестный метод '{method}' (доступны: {', '.join(METHODS)})")
    seeds = CellSeeds.from_seed(seed)
    train_raw, test_raw = make_imbalanced_multiclass(task.dataset, task.majority, ir, seeds.split,
                                                     classes=task.task_classes,
                                                     test_fraction=test_fraction)
    scaler = Standardizer.fit(train_raw)
    train_set, test_set = scaler.transform(train_raw), scaler.transform(test_raw)

    trained: Dict[int, TrainResult] = {}
    if method == "cn":
        balanced = train_set
    elif method == "os_cn":
        balanced = random_oversample(train_set, seeds.sampling)
    else:
        trained = _train_generators(method, train_set, task.majority, trainer_cfg,
                                    seeds.gan, run_dir)
        generators = {label: result.elite_model() for label, result in trained.items()}
        if len(generators) == 1:
            (label, model), = generators.items()
            balanced = oversample_with_generator(train_set, model, label, seeds.sampling)
        else:
            balanced = multiclass_balance(train_set, generators, seeds.sampling)

    classifier = train_classifier(balanced, replace(classifier_cfg, seed=seeds.classifier))
    metrics = evaluate(classifier, test_set)

    mixture = task.mixtures.get(task.minority)
    f_elite, convergence = None, None
    if task.minority in trained:
        result = trained[task.minority]
        f_elite = result.state.elite_fitness.combined if result.history else None
        convergence = convergence_iteration(result.history) if result.history else None
    if task.minority in trained and mixture is not None and coverage_samples > 0:
        rng = np.random.default_rng(np.random.SeedSequence([seeds.sampling, 1]))
        samples = scaler.inverse_points(trained[task.minority].elite_model().sample(coverage_samples, rng))
        report = mode_coverage(samples, mixture, min_per_mode)
        metrics = metrics.with_coverage(report.covered, report.hq_ratio, report.sym_kl)

    logger.info("%s IR=%g seed=%d: accuracy=%.4f, recall_min=%.4f",
                method, ir, seed, metrics.accuracy, metrics.recall[task.minority])
    return CellResult(method, ir, seed, metrics, f_elite, convergence)


def results_frame(results: Sequence[CellResult], minority: int, majority: int) -> pd.DataFrame:
    """Таблица строк метрик в порядке METRIC_COLUMNS."""
    rows = [r.row(minority, majority) for r in results]
    return pd.DataFrame(rows, columns=METRIC_COLUMNS)


def aggregate_means(frame: pd.DataFrame, keys: Sequence[str] = ("method", "ir")) -> pd.DataFrame:
    """
    Средние по seed для каждой комбинации ключей.

    Порядок групп - порядок первого появления; столбец seeds - число seed в группе.
    """
    keys = list(keys)
    values = [c for c in frame.columns if c not in keys and c != "seed"]
    numeric = frame[keys + values].copy()
    for column in values:
        numeric[column] = pd.to_numeric(numeric[column], errors="coerce")
    grouped = numeric.groupby(keys, sort=False)
    means = grouped[values].mean().reset_index()
    means.insert(len(keys), "seeds", grouped.size().to_numpy())
    return means


def write_frame_csv(path: str, frame: pd.DataFrame) -> None:
    """CSV с точным представлением float (байтово воспроизводимо)."""
    dir_path = os.path.dirname(path)
    if dir_path:
        os.makedirs(dir_path, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
