"""
Приёмочные кампании на полных конфигурациях из config/.

Все тесты помечены slow: каждый занимает от нескольких до десятков минут.
Проверяются только качественные порядки (какой метод не хуже какого).
"""

import os
import sys
import tempfile
from dataclasses import replace

import numpy as np
import pytest

# Добавляем путь к src для импорта
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from bench import Dataset, save_dataset_csv
from experiment import parse_config, parse_config_text, run
from trainer import TrainMode

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'config')
JOBS = min(4, os.cpu_count() or 1)


def mean_modes(config, mode, objective=None):
    trainer = replace(config.trainer, mode=mode, fixed_objective=objective)
    with tempfile.TemporaryDirectory() as out:
        report = run(replace(config, trainer=trainer), out, jobs=JOBS)
    assert report.exit_code == 0
    return report.rows["modes"].mean()


@pytest.mark.slow
def test_mode_coverage_ordering():
    """Кольцо из 8 гауссиан, 200 точек, 5 seed: aggan >= egan >= лучший fixed, aggan >= 6."""
    config = parse_config(os.path.join(CONFIG_DIR, "train_ring.yaml"), "train")
    aggan = mean_modes(config, TrainMode.AGGAN)
    egan = mean_modes(config, TrainMode.EGAN)
    fixed = max(mean_modes(config, TrainMode.FIXED, objective)
                for objective in ("minimax", "nonsaturating", "leastsquares"))
    assert aggan >= egan >= fixed
    assert aggan >= 6.0


@pytest.mark.slow
def test_imbalance_ordering_on_rings():
    """IR = 100: полнота и F1 миноритарного класса aggan >= os_cn >= cn, полнота aggan выше cn на 10 пунктов."""
    config = parse_config(os.path.join(CONFIG_DIR, "bench_rings.yaml"), "bench")
    config = replace(config, bench=replace(config.bench, methods=("cn", "os_cn", "aggan"), irs=(100.0,)))
    with tempfile.TemporaryDirectory() as out:
        report = run(config, out, jobs=JOBS)
    assert report.exit_code == 0
    means = report.means.set_index("method")
    for column in ("rec_min", "f1_min"):
        assert means.loc["aggan", column] >= means.loc["os_cn", column] >= means.loc["cn", column]
    assert means.loc["aggan", "rec_min"] - means.loc["cn", "rec_min"] >= 0.10


def digits_standin(path, per_class=500, seed=0):
    """Замена digits.csv: 10 классов-прототипов 8x8 с яркостью 0..16 и шумом."""
    rng = np.random.default_rng(seed)
    prototypes = rng.integers(0, 17, size=(10, 64)).astype(np.float64)
    labels = np.repeat(np.arange(10), per_class)
    features = np.clip(prototypes[labels] + rng.normal(0.0, 3.0, (labels.size, 64)), 0.0, 16.0)
    save_dataset_csv(path, Dataset(np.round(features), labels))


@pytest.mark.slow
def test_imbalance_ordering_on_digits():
    """Цифры 8x8, IR = 100: полнота миноритарного класса aggan не ниже cn."""
    with open(os.path.join(CONFIG_DIR, "bench_digits.yaml"), encoding="utf-8") as f:
        text = f.read()
    with tempfile.TemporaryDirectory() as tmp:
        data_path = os.path.join(tmp, "digits.csv")
        digits_standin(data_path)
        config = parse_config_text(text.replace("../data/digits.csv", data_path), "bench")
        config = replace(config, seeds=(0, 1, 2), trainer=replace(config.trainer, iterations=300))
        report = run(config, os.path.join(tmp, "run"), jobs=JOBS)
    assert report.exit_code == 0
    assert set(report.rows["method"]) == {"cn", "os_cn", "aggan"}
    means = report.means.set_index("method")
    assert means.loc["aggan", "rec_min"] >= means.loc["cn", "rec_min"]


@pytest.mark.slow
def test_sweep_grid_convergence_ordering():
    """Полная сетка 3 x 2: 6 строк средних, горячая медленная схема сходится не раньше."""
    config = parse_config(os.path.join(CONFIG_DIR, "sweep.yaml"), "sweep")
    with tempfile.TemporaryDirectory() as out:
        report = run(config, out, jobs=JOBS)
    assert report.exit_code == 0
    means = report.means.set_index(["t_init", "alpha"])
    assert len(means) == 6
    assert means.loc[(10000.0, 0.999), "convergence_epoch"] >= means.loc[(100.0, 0.99), "convergence_epoch"]


@pytest.mark.slow
def test_bench_rerun_is_byte_identical():
    config = parse_config(os.path.join(CONFIG_DIR, "bench_rings.yaml"), "bench")
    config = replace(config, seeds=(0, 1),
                     bench=replace(config.bench, methods=("os_cn", "aggan"), irs=(10.0,)),
                     trainer=replace(config.trainer, iterations=100))
    contents = []
    with tempfile.TemporaryDirectory() as out:
        for name in ("a", "b"):
            run(config, os.path.join(out, name), jobs=JOBS)
            with open(os.path.join(out, name, "metrics.csv"), "rb") as f:
                contents.append(f.read())
    assert contents[0] == contents[1]
