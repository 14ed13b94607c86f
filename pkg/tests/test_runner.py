"""
Тесты оркестрации запусков: задания, манифест, агрегаты, коды выхода.
"""

import unittest
from unittest.mock import patch
import json
import os
import sys
import tempfile

import numpy as np
import pandas as pd

# Добавляем путь к src для импорта
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from experiment import (
    EXIT_OK,
    EXIT_PARTIAL,
    EXIT_RUNTIME,
    ConfigError,
    RunDirectoryExistsError,
    load_manifest,
    parse_config_text,
    plan_jobs,
    run,
    scatter,
    sweep,
    build_landscape,
    training_data,
)
from experiment import runner
from experiment.manifest import ErrorRecord, write_errors
from trainer import write_points_csv


SMALL_TRAINER = """
trainer:
  batch_size: 16
  eval_batch_size: 32
  hidden_width: 8
  hidden_layers: 1
  iterations: 4
  t_init: 1.0
  alpha: 0.9
"""

TRAIN_CONFIG = """
kind: train
seed: 3
seeds: 2
dataset:
  kind: ring
  k: 4
  n: 64
  sigma: 0.05
bench:
  coverage_samples: 200
""" + SMALL_TRAINER

BENCH_CONFIG = """
kind: bench
seed: 1
seeds: 1
dataset:
  kind: rings
  k: 4
  n: 120
  sigma: 0.05
bench:
  methods: [cn, os_cn]
  irs: [2, 5]
classifier:
  hidden_width: 8
  hidden_layers: 1
  epochs: 3
""" + SMALL_TRAINER

THEORY_CONFIG = """
kind: theory
seeds: 1
theory:
  landscape: rugged
  n_states: 8
  n_chords: 4
  runs: 5
  chain:
    budget: 0
"""

SWEEP_CONFIG = """
kind: sweep
seeds: 1
dataset:
  kind: ring
  k: 4
  n: 64
bench:
  coverage_samples: 100
sweep:
  t_init: [1.0, 100.0]
  alpha: [0.9]
""" + SMALL_TRAINER


class RunnerTestCase(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def out(self, name="run"):
        return os.path.join(self.temp_dir, name)


class TestPlanning(unittest.TestCase):
    """Тесты развёртки заданий."""

    def test_bench_jobs_ordered_by_seed_then_cell(self):
        config = parse_config_text(BENCH_CONFIG.replace("seeds: 1", "seeds: [4, 2]"))
        jobs = plan_jobs(config)
        self.assertEqual(len(jobs), 8)
        self.assertEqual([j.seed for j in jobs], [4] * 4 + [2] * 4)
        self.assertEqual(jobs[0].cell, ("cn", 2.0))
        self.assertEqual(jobs[3].cell, ("os_cn", 5.0))

    def test_sweep_jobs(self):
        jobs = plan_jobs(parse_config_text(SWEEP_CONFIG))
        self.assertEqual([j.cell for j in jobs], [(1.0, 0.9), (100.0, 0.9)])

    def test_training_data_for_ring(self):
        config = parse_config_text(TRAIN_CONFIG)
        data, mixture = training_data(config, 0)
        self.assertEqual(data.shape, (64, 2))
        self.assertEqual(mixture.k, 4)
        again, _ = training_data(config, 0)
        self.assertEqual(data.tobytes(), again.tobytes())

    def test_training_data_for_rings_uses_minority(self):
        data, mixture = training_data(parse_config_text(BENCH_CONFIG), 0)
        self.assertEqual(data.shape, (120, 2))
        self.assertEqual(mixture.k, 4)

    def test_landscape_seed_override(self):
        config = parse_config_text(THEORY_CONFIG.replace("runs: 5", "runs: 5\n  landscape_seed: 9"))
        a = build_landscape(config, 0)
        b = build_landscape(config, 1)
        self.assertEqual(a.values, b.values)


class TestRun(RunnerTestCase):
    """Тесты полного запуска."""

    def test_train_outputs_and_manifest(self):
        report = run(parse_config_text(TRAIN_CONFIG), self.out())
        self.assertEqual(report.exit_code, EXIT_OK)
        self.assertEqual(report.rows["seed"].tolist(), [0, 1])
        self.assertIsNone(report.means)
        for seed in (0, 1):
            self.assertTrue(os.path.exists(os.path.join(self.out(), f"seed_{seed}", "history.csv")))
        manifest = load_manifest(self.out())
        self.assertEqual(manifest["status"], "completed")
        self.assertEqual(manifest["outputs"]["0"]["history.csv"], os.path.join("seed_0", "history.csv"))
        self.assertEqual(manifest["aggregates"], {"metrics.csv": "metrics.csv"})
        self.assertEqual(manifest["config"]["trainer"]["iterations"], 4)
        self.assertIsNone(report.errors_path)

    def test_metrics_csv_is_deterministic(self):
        config = parse_config_text(TRAIN_CONFIG)
        run(config, self.out("a"))
        run(config, self.out("b"))
        with open(os.path.join(self.out("a"), "metrics.csv"), "rb") as fa, \
                open(os.path.join(self.out("b"), "metrics.csv"), "rb") as fb:
            self.assertEqual(fa.read(), fb.read())

    def test_existing_run_requires_overwrite(self):
        config = parse_config_text(THEORY_CONFIG)
        run(config, self.out())
        with self.assertRaises(RunDirectoryExistsError):
            run(config, self.out())
        report = run(config, self.out(), overwrite=True)
        self.assertEqual(report.exit_code, EXIT_OK)

    def test_leftover_directory_without_manifest(self):
        config = parse_config_text(THEORY_CONFIG)
        os.makedirs(os.path.join(self.out(), "seed_0"))
        with self.assertRaises(RunDirectoryExistsError):
            run(config, self.out())
        report = run(config, self.out(), overwrite=True)
        self.assertEqual(report.exit_code, EXIT_OK)

    def test_empty_directory_is_reused(self):
        os.makedirs(self.out())
        report = run(parse_config_text(THEORY_CONFIG), self.out())
        self.assertEqual(report.exit_code, EXIT_OK)

    def test_theory_budget_zero(self):
        report = run(parse_config_text(THEORY_CONFIG), self.out())
        self.assertEqual(report.exit_code, EXIT_OK)
        row = report.rows.iloc[0]
        self.assertEqual(row["states"], 8)
        self.assertEqual(row["monotone"], 1)
        self.assertTrue(0.0 <= row["hit_fraction"] <= 1.0)
        hitprob = pd.read_csv(os.path.join(self.out(), "seed_0", "hitprob.csv"))
        self.assertEqual(sorted(hitprob["variant"].tolist()), ["annealed", "greedy"])
        self.assertEqual(hitprob["budget"].tolist(), [0, 0])

    def test_theory_greedy_comparison(self):
        text = THEORY_CONFIG.replace("runs: 5", "runs: 5\n  greedy_landscapes: 3")
        text = text.replace("budget: 0", "budget: 20")
        report = run(parse_config_text(text), self.out())
        self.assertEqual(report.exit_code, EXIT_OK)
        comparison = pd.read_csv(os.path.join(self.out(), "seed_0", "comparison.csv"))
        self.assertEqual(len(comparison), 3)
        self.assertTrue(0.0 <= report.rows.iloc[0]["sign_p"] <= 1.0)

    def test_bench_means_per_method_and_ir(self):
        report = run(parse_config_text(BENCH_CONFIG), self.out())
        self.assertEqual(report.exit_code, EXIT_OK)
        self.assertEqual(len(report.rows), 4)
        self.assertEqual(len(report.means), 4)
        self.assertEqual(report.means[["method", "ir"]].values.tolist(),
                         [["cn", 2.0], ["cn", 5.0], ["os_cn", 2.0], ["os_cn", 5.0]])
        self.assertEqual(report.means["seeds"].tolist(), [1, 1, 1, 1])
        self.assertTrue(os.path.exists(os.path.join(self.out(), "means.csv")))

    def test_bench_needs_labelled_data(self):
        config = parse_config_text(BENCH_CONFIG.replace("kind: rings", "kind: ring"))
        with self.assertRaises(ConfigError):
            run(config, self.out())
        self.assertFalse(os.path.exists(self.out()))

    def test_sweep_without_ir_trains_generators(self):
        report = sweep(parse_config_text(SWEEP_CONFIG), self.out())
        self.assertEqual(report.exit_code, EXIT_OK)
        self.assertEqual(report.means["t_init"].tolist(), [1.0, 100.0])
        self.assertTrue(report.rows["accuracy"].isna().all())
        self.assertTrue(os.path.isdir(os.path.join(self.out(), "seed_0", "T1_a0.9")))
        self.assertTrue(os.path.isdir(os.path.join(self.out(), "seed_0", "T100_a0.9")))


class TestFailures(RunnerTestCase):
    """Тесты частичных и полных отказов."""

    def _failing_on(self, bad_seeds):
        original = runner._HANDLERS["train"]

        def handler(config, job, run_dir, base_dir):
            if job.seed in bad_seeds:
                raise FloatingPointError("нечисловой градиент")
            return original(config, job, run_dir, base_dir)
        return handler

    def test_partial_failure(self):
        with patch.dict(runner._HANDLERS, {"train": self._failing_on({1})}):
            report = run(parse_config_text(TRAIN_CONFIG), self.out())
        self.assertEqual(report.exit_code, EXIT_PARTIAL)
        self.assertEqual(report.failed_seeds, [1])
        self.assertEqual(report.rows["seed"].tolist(), [0])

        with open(report.errors_path, encoding="utf-8") as f:
            errors = json.load(f)["errors"]
        self.assertEqual(len(errors), 1)
        self.assertEqual(errors[0]["seed"], 1)
        self.assertEqual(errors[0]["error_type"], "FloatingPointError")
        self.assertEqual(errors[0]["stage"], "train")

        manifest = load_manifest(self.out())
        self.assertEqual(manifest["status"], "partial")
        self.assertEqual(manifest["failed_seeds"], [1])
        self.assertEqual(manifest["outputs"]["1"], {})

    def test_failed_cell_drops_whole_seed_from_aggregates(self):
        original = runner._HANDLERS["bench"]

        def handler(config, job, run_dir, base_dir):
            if job.seed == 1 and job.cell == ("os_cn", 5.0):
                raise FloatingPointError("нечисловой градиент")
            return original(config, job, run_dir, base_dir)

        config = parse_config_text(BENCH_CONFIG.replace("seeds: 1", "seeds: 2"))
        with patch.dict(runner._HANDLERS, {"bench": handler}):
            report = run(config, self.out())
        self.assertEqual(report.exit_code, EXIT_PARTIAL)
        self.assertEqual(report.failed_seeds, [1])
        self.assertEqual(report.rows["seed"].tolist(), [0, 0, 0, 0])
        self.assertEqual(report.means["seeds"].tolist(), [1, 1, 1, 1])
        written = pd.read_csv(os.path.join(self.out(), "metrics.csv"))
        self.assertEqual(set(written["seed"]), {0})
        with open(report.errors_path, encoding="utf-8") as f:
            errors = json.load(f)["errors"]
        self.assertEqual([e["stage"] for e in errors], ["bench:os_cn:5.0"])

    def test_all_seeds_failed(self):
        with patch.dict(runner._HANDLERS, {"train": self._failing_on({0, 1})}):
            report = run(parse_config_text(TRAIN_CONFIG), self.out())
        self.assertEqual(report.exit_code, EXIT_RUNTIME)
        self.assertIsNone(report.rows)
        self.assertFalse(os.path.exists(os.path.join(self.out(), "metrics.csv")))
        self.assertEqual(load_manifest(self.out())["status"], "failed")

    def test_write_errors_without_records(self):
        self.assertIsNone(write_errors(self.out(), []))
        record = ErrorRecord.from_exception(None, "run", RuntimeError("сбой"))
        path = write_errors(self.out(), [record])
        with open(path, encoding="utf-8") as f:
            self.assertEqual(json.load(f)["errors"][0]["message"], "сбой")


class TestScatter(RunnerTestCase):
    """Тесты разметки точек модами."""

    def test_modes_column(self):
        config = parse_config_text(TRAIN_CONFIG)
        _, mixture = training_data(config, 0)
        points = mixture.means[[0, 2]].copy()
        points = points.tolist() + [[50.0, 50.0]]
        samples = os.path.join(self.temp_dir, "samples.csv")
        write_points_csv(samples, np.array(points))
        out_path = os.path.join(self.temp_dir, "modes.csv")
        frame = scatter(config, samples, out_path)
        self.assertEqual(frame["mode"].tolist(), [0, 2, -1])
        written = pd.read_csv(out_path)
        self.assertEqual(list(written.columns), ["x0", "x1", "mode"])
        self.assertEqual(written["mode"].tolist(), [0, 2, -1])

    def test_dimension_mismatch(self):
        config = parse_config_text(TRAIN_CONFIG)
        samples = os.path.join(self.temp_dir, "bad.csv")
        with open(samples, "w", encoding="utf-8") as f:
            f.write("x0\n1.0\n")
        with self.assertRaises(ValueError):
            scatter(config, samples, os.path.join(self.temp_dir, "out.csv"))


if __name__ == '__main__':
    unittest.main()
