"""
Тесты консольной точки входа main.py.

Включают коды выхода и сквозные запуски на маленьких конфигурациях.
"""

import pytest
import sys
import os
import json

import yaml

# Добавляем путь к src для импорта
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from main import build_parser, main


# ============================================================================
# Фикстуры
# ============================================================================

TRAIN_YAML = """
kind: train
seeds: 1
dataset:
  kind: ring
  k: 4
  n: 48
bench:
  coverage_samples: 100
trainer:
  batch_size: 16
  eval_batch_size: 16
  hidden_width: 8
  hidden_layers: 1
  iterations: 3
"""


@pytest.fixture
def train_config(tmp_path):
    """Маленькая конфигурация обучения на кольце."""
    path = tmp_path / "train.yaml"
    path.write_text(TRAIN_YAML, encoding="utf-8")
    return str(path)


@pytest.fixture
def run_dir(tmp_path):
    return str(tmp_path / "run")


# ============================================================================
# Разбор аргументов
# ============================================================================

def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_parser_run_flags():
    args = build_parser().parse_args(
        ["bench", "--config", "c.yaml", "--out", "o", "--seeds", "3", "--overwrite", "--jobs", "2"]
    )
    assert args.command == "bench"
    assert args.overwrite is True
    assert args.jobs == 2
    assert args.seeds == "3"


# ============================================================================
# validate
# ============================================================================

def test_validate_prints_full_config(train_config, capsys):
    assert main(["validate", "--config", train_config]) == 0
    dumped = yaml.safe_load(capsys.readouterr().out)
    assert dumped["kind"] == "train"
    assert dumped["trainer"]["iterations"] == 3
    assert dumped["trainer"]["alpha"] == 0.99


def test_validate_applies_seed_override(train_config, capsys):
    assert main(["validate", "--config", train_config, "--seeds", "0,4"]) == 0
    assert yaml.safe_load(capsys.readouterr().out)["seeds"] == [0, 4]


def test_validate_bad_alpha(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("kind: train\ntrainer:\n  alpha: 1.5\n", encoding="utf-8")
    assert main(["validate", "--config", str(path)]) == 2
    assert "alpha" in capsys.readouterr().out


def test_missing_config_file(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "absent.yaml")]) == 2


def test_bad_seeds_flag(train_config):
    assert main(["validate", "--config", train_config, "--seeds", "0,0"]) == 2
    assert main(["validate", "--config", train_config, "--seeds", "abc"]) == 2


# ============================================================================
# Запуски
# ============================================================================

def test_train_run_and_overwrite(train_config, run_dir):
    assert main(["train", "--config", train_config, "--out", run_dir]) == 0
    assert os.path.exists(os.path.join(run_dir, "metrics.csv"))
    with open(os.path.join(run_dir, "manifest.json"), encoding="utf-8") as f:
        assert json.load(f)["status"] == "completed"

    assert main(["train", "--config", train_config, "--out", run_dir]) == 2
    assert main(["train", "--config", train_config, "--out", run_dir, "--overwrite"]) == 0


def test_subcommand_must_match_kind(train_config, run_dir):
    assert main(["theory", "--config", train_config, "--out", run_dir]) == 2
    assert not os.path.exists(run_dir)


def test_jobs_must_be_positive(train_config, run_dir):
    assert main(["train", "--config", train_config, "--out", run_dir, "--jobs", "0"]) == 2


def test_bench_on_unlabelled_data(tmp_path, run_dir):
    path = tmp_path / "bench.yaml"
    path.write_text("kind: bench\ndataset:\n  kind: ring\n", encoding="utf-8")
    assert main(["bench", "--config", str(path), "--out", run_dir]) == 2


def test_theory_run(tmp_path, run_dir):
    path = tmp_path / "theory.yaml"
    path.write_text(
        "kind: theory\ntheory:\n  landscape: ring\n  n_states: 6\n  runs: 3\n"
        "  chain:\n    budget: 10\n",
        encoding="utf-8",
    )
    assert main(["theory", "--config", str(path), "--out", run_dir, "--seeds", "2"]) == 0
    for seed in (0, 1):
        assert os.path.exists(os.path.join(run_dir, f"seed_{seed}", "chains.csv"))


# ============================================================================
# scatter
# ============================================================================

def test_scatter_default_output(train_config, tmp_path):
    samples = tmp_path / "points.csv"
    samples.write_text("x0,x1\n2.0,0.0\n9.0,9.0\n", encoding="utf-8")
    assert main(["scatter", "--config", train_config, "--samples", str(samples)]) == 0
    lines = (tmp_path / "points_modes.csv").read_text(encoding="utf-8").splitlines()
    assert lines == ["x0,x1,mode", "2.0,0.0,0", "9.0,9.0,-1"]


def test_scatter_missing_samples(train_config, tmp_path):
    code = main(["scatter", "--config", train_config, "--samples", str(tmp_path / "none.csv")])
    assert code == 2
