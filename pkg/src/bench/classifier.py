"""
Классификатор CN: небольшой MLP с softmax и кросс-энтропией.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ndcore import PROB_EPS, MLPSpec, ParamSet, classifier_spec, forward, backward, init_params, init_opt_state, opt_step
from .datasets import BenchError, Dataset


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassifierConfig:
    """Настройки классификатора: архитектура и обучение мини-батчами."""
    hidden_width: int = 32
    hidden_layers: int = 2
    epochs: int = 100
    batch_size: int = 64
    lr: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("hidden_width", "hidden_layers", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ClassifierError(f"{name} должно быть >= 1")
        if not self.lr > 0:
            raise ClassifierError("lr должна быть > 0")


@dataclass(frozen=True)
class Classifier:
    """Обученный классификатор; classes[i] - метка i-го выхода."""
    spec: MLPSpec
    params: ParamSet
    classes: Tuple[int, ...]

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return forward(self.spec, self.params, np.atleast_2d(features))[0]

    def predict(self, features: np.ndarray) -> np.ndarray:
        idx = np.argmax(self.predict_proba(features), axis=1)
        return np.asarray(self.classes, dtype=np.int64)[idx]


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Средняя кросс-энтропия; targets - индексы выходов."""
    return float(-np.mean(np.log(np.maximum(probs[np.arange(len(targets)), targets], PROB_EPS))))


def train_classifier(train: Dataset, cfg: ClassifierConfig) -> Classifier:
    """
    Обучение классификатора на всём каталоге классов выборки.

    Raises:
        ClassifierError: Если классов меньше двух или какой-то класс каталога пуст
    """
    counts = train.counts()
    if len(counts) < 2:
        raise ClassifierError("Нужно хотя бы 2 класса")
    absent = [c for c, n in counts.items() if n == 0]
    if absent:
        raise ClassifierError(f"Классы {absent} отсутствуют в обучающей выборке")

    index = {c: i for i, c in enumerate(train.classes)}
    targets = np.array([index[int(c)] for c in train.labels])
    onehot = np.eye(len(train.classes))[targets]

    rng = np.random.default_rng(cfg.seed)
    spec = classifier_spec(train.dim, len(train.classes), cfg.hidden_width, cfg.hidden_layers)
    params = init_params(spec, rng)
    opt = init_opt_state(params, cfg.optimizer, cfg.lr)

    for epoch in range(cfg.epochs):
        order = rng.permutation(train.n)
        for start in range(0, train.n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            probs, tape = forward(spec, params, train.features[batch])
            # dL/dp для кросс-энтропии; backward применяет якобиан softmax
            output_grad = -onehot[batch] / (np.maximum(probs, PROB_EPS) * len(batch))
            grads, _ = backward(spec, params, tape, output_grad)
            params, opt = opt_step(params, grads, opt)
        if (epoch + 1) % 25 == 0:
            loss = cross_entropy(forward(spec, params, train.features)[0], targets)
            logger.debug("Эпоха %d: кросс-энтропия %.4f", epoch + 1, loss)

    return Classifier(spec, params, train.classes)


class ClassifierError(BenchError, ValueError):
    """Некорректная обучающая выборка или настройки классификатора."""
    pass
