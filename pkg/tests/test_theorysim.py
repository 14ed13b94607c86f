"""
Тесты симулятора цепи {G_n}: ландшафты, порождение, обновление, анализ.
"""

import unittest
import csv
import math
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np
import pytest

# Добавляем путь к src для импорта
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from annealing import MetropolisDecision, ParentChoice
from theorysim import (
    Landscape,
    line,
    ring,
    star,
    rugged,
    trap,
    save_landscape,
    load_landscape,
    disconnected_states,
    ChainConfig,
    ChainState,
    Trajectory,
    f_gen,
    f_upd,
    run_chain,
    first_hit_iteration,
    run_seeds,
    HitEstimate,
    check_monotone,
    check_homogeneity,
    estimate_hit_probability,
    hit_curve,
    compare_greedy,
    write_chain_csv,
    write_hitprob_csv,
    LandscapeError,
    ChainConfigError,
)


class TestLandscape(unittest.TestCase):
    """Тесты ландшафтов и их генераторов."""

    def test_asymmetric_neighbors(self):
        with self.assertRaises(LandscapeError):
            Landscape([0.0, 1.0, 2.0], [[1], [0, 2], [0]])

    def test_self_neighbor(self):
        with self.assertRaises(LandscapeError):
            Landscape([0.0, 1.0], [[0, 1], [0]])

    def test_isolated_state(self):
        with self.assertRaises(LandscapeError):
            Landscape([0.0, 1.0, 2.0], [[1], [0], []])

    def test_disconnected(self):
        neighbors = [[1], [0], [3], [2]]
        self.assertEqual(disconnected_states(neighbors), [2, 3])
        with self.assertRaises(LandscapeError):
            Landscape([0.0, 1.0, 2.0, 3.0], neighbors)

    def test_single_state(self):
        with self.assertRaises(LandscapeError):
            Landscape([0.0], [[]])

    def test_global_minima(self):
        land = line(4, [0.3, 0.1, 0.5, 0.1])
        self.assertEqual(land.global_minima(), (1, 3))
        self.assertEqual(land.min_value, 0.1)

    def test_generators_are_connected(self):
        rng = np.random.default_rng(0)
        for land in (line(5, rng=rng), ring(6, rng=rng), star([0.2, 0.4, 0.1]), rugged(32, 16, rng)):
            self.assertEqual(disconnected_states(land.neighbors), [])

    def test_rugged_chord_count(self):
        land = rugged(16, 10, np.random.default_rng(3))
        edges = sum(len(nb) for nb in land.neighbors) // 2
        self.assertEqual(edges, 16 + 10)

    def test_trap_geometry(self):
        """Узкий глобальный минимум у правого края, локальный в n/4."""
        land = trap(64)
        self.assertEqual(land.global_minima(), (59,))
        self.assertEqual(land.values[59], 0.0)
        self.assertAlmostEqual(land.values[16], 0.2, places=12)

    def test_save_and_load(self):
        land = rugged(12, 5, np.random.default_rng(4))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "land.csv")
            save_landscape(path, land)
            loaded = load_landscape(path)
        self.assertEqual(loaded.values, land.values)
        self.assertEqual(loaded.neighbors, land.neighbors)

    def test_load_bad_header(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "bad.csv")
            with open(path, "w", encoding="utf-8") as f:
                f.write("id,value\n0,1.0\n")
            with self.assertRaises(LandscapeError):
                load_landscape(path)


class TestChainSteps(unittest.TestCase):
    """Тесты F_gen и F_upd."""

    def test_only_neighbor(self):
        """Путь из 2 состояний: из 0 единственный сосед 1."""
        land = line(2, [1.0, 0.5])
        child = f_gen(ChainState(0, 0), land, ChainConfig(), np.random.default_rng(0))
        self.assertEqual(child, 1)

    def test_single_offspring_is_uniform_draw(self):
        land = ring(10, rng=np.random.default_rng(1))
        cfg = ChainConfig(n_offspring=1)
        a, b = np.random.default_rng(9), np.random.default_rng(9)
        child = f_gen(ChainState(4, 4), land, cfg, a)
        expected = land.neighbors[4][int(b.integers(0, 2, size=1)[0])]
        self.assertEqual(child, expected)

    def test_best_of_many(self):
        """Много потомков со звезды: выбирается лучший лист."""
        land = star([0.5, 0.2, 0.9, 0.3])
        cfg = ChainConfig(n_offspring=200)
        self.assertEqual(f_gen(ChainState(0, 0), land, cfg, np.random.default_rng(0)), 2)

    def test_elite_parent(self):
        land = line(3, [0.5, 0.2, 0.9])
        cfg = ChainConfig(parent_choice=ParentChoice.ELITE)
        child = f_gen(ChainState(2, 0), land, cfg, np.random.default_rng(0))
        self.assertEqual(child, 1)

    def test_improvement_always_accepted(self):
        land = line(3, [0.5, 0.2, 0.9])
        rng = np.random.default_rng(0)
        for _ in range(100):
            state, decision = f_upd(ChainState(0, 0), 1, land, 1e-8, rng)
            self.assertTrue(decision.accepted)
            self.assertEqual((state.g, state.g_b), (1, 1))

    def test_worse_by_temperature(self):
        """f(g_cbest) - f(g) = T -> P = e^-1."""
        land = line(2, [0.0, 0.5])
        _, decision = f_upd(ChainState(0, 0), 1, land, 0.5, np.random.default_rng(0))
        self.assertAlmostEqual(decision.probability, math.exp(-1), places=12)
        self.assertAlmostEqual(decision.delta, 0.5, places=12)

    def test_elite_kept_on_worse_move(self):
        land = line(2, [0.0, 0.5])
        state, decision = f_upd(ChainState(0, 0), 1, land, 1e6, np.random.default_rng(0))
        self.assertTrue(decision.accepted)
        self.assertEqual(state.g, 1)
        self.assertEqual(state.g_b, 0)

    def test_greedy_rejects_worse(self):
        land = line(2, [0.0, 0.5])
        state, decision = f_upd(ChainState(0, 0), 1, land, 1e6, np.random.default_rng(0), greedy=True)
        self.assertFalse(decision.accepted)
        self.assertEqual(state, ChainState(0, 0, 1))

    def test_invalid_config(self):
        with self.assertRaises(ChainConfigError):
            ChainConfig(alpha=0.0)
        with self.assertRaises(ChainConfigError):
            ChainConfig(budget=-1)
        with self.assertRaises(ChainConfigError):
            run_chain(line(3), ChainConfig(start=5))

    def test_t_min_bounds(self):
        """t_min обязана лежать в (0, t_init]."""
        with self.assertRaises(ChainConfigError):
            ChainConfig(t_min=0.0)
        with self.assertRaises(ChainConfigError):
            ChainConfig(t_min=-1e-3)
        with self.assertRaises(ChainConfigError):
            ChainConfig(t_init=0.5, t_min=1.0)
        self.assertEqual(ChainConfig(t_init=0.5, t_min=0.5).t_min, 0.5)

    def test_chain_does_not_depend_on_trainer(self):
        """Симулятор цепи не тянет за собой модели GAN."""
        import ast
        import annealing
        import trainer
        package_dir = os.path.join(os.path.dirname(__file__), '..', 'src', 'theorysim')
        for name in sorted(os.listdir(package_dir)):
            if not name.endswith(".py"):
                continue
            with open(os.path.join(package_dir, name), encoding="utf-8") as f:
                tree = ast.parse(f.read())
            modules = {node.module for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)}
            modules |= {alias.name for node in ast.walk(tree) if isinstance(node, ast.Import)
                        for alias in node.names}
            self.assertNotIn("trainer", modules, name)
            self.assertNotIn("ndcore", modules, name)
        self.assertIs(trainer.ParentChoice, annealing.ParentChoice)
        self.assertIs(ChainConfig().parent_choice, annealing.ParentChoice.CURRENT)


class TestRunChain(unittest.TestCase):
    """Тесты полного прогона."""

    def test_zero_budget(self):
        traj = run_chain(ring(5), ChainConfig(budget=0, seed=2))
        self.assertEqual(len(traj.states), 1)
        self.assertEqual(traj.decisions, ())
        self.assertTrue(check_monotone(traj).ok)

    def test_deterministic(self):
        land = rugged(20, 8, np.random.default_rng(5))
        cfg = ChainConfig(budget=300, seed=11)
        self.assertEqual(run_chain(land, cfg), run_chain(land, cfg))

    def test_random_walk_limit(self):
        """При огромной T принимается всё, а элита всё равно не ухудшается."""
        land = rugged(20, 8, np.random.default_rng(6))
        traj = run_chain(land, ChainConfig(t_init=1e12, alpha=1.0, budget=500, seed=1))
        self.assertTrue(all(d.accepted for d in traj.decisions))
        self.assertTrue(check_monotone(traj).ok)

    def test_temperature_schedule(self):
        traj = run_chain(ring(6), ChainConfig(t_init=2.0, alpha=0.5, budget=4))
        self.assertEqual(traj.temperatures, (2.0, 1.0, 0.5, 0.25))

    def test_first_hit_matches_trajectory(self):
        land = rugged(24, 10, np.random.default_rng(7))
        cfg = ChainConfig(budget=400, seed=3)
        traj = run_chain(land, cfg)
        hit = first_hit_iteration(land, cfg)
        hits = [i for i, v in enumerate(traj.elite_values) if v == land.min_value]
        self.assertEqual(hit, hits[0] if hits else None)

    def test_run_seeds(self):
        seeds = run_seeds(0, 5)
        self.assertEqual(len(set(seeds)), 5)
        self.assertEqual(seeds, run_seeds(0, 5))

    def test_chain_csv(self):
        land = ring(5)
        traj = run_chain(land, ChainConfig(budget=7))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "chains.csv")
            write_chain_csv(path, traj, land)
            with open(path, newline="", encoding="utf-8") as f:
                rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 8)
        self.assertEqual(rows[0]["accepted"], "")
        self.assertEqual(int(rows[-1]["g_b"]), traj.states[-1].g_b)


class TestMonotone(unittest.TestCase):
    """Тесты проверки монотонности элиты."""

    @staticmethod
    def _trajectory(values):
        states = tuple(ChainState(0, 0, i) for i in range(len(values)))
        decision = MetropolisDecision(1.0, 0.0, True)
        n = len(values) - 1
        return Trajectory(states, (0,) * n, (decision,) * n, (1.0,) * n, tuple(values))

    def test_single_state(self):
        self.assertTrue(check_monotone(self._trajectory([0.3])).ok)

    def test_constructed_regression(self):
        report = check_monotone(self._trajectory([1.0, 0.5, 0.7, 0.1]))
        self.assertFalse(report.ok)
        self.assertEqual(report.first_violation, 2)

    def test_fuzz(self):
        """1000 случайных ландшафтов и seed: ни одного нарушения."""
        rng = np.random.default_rng(2024)
        for i in range(1000):
            n = int(rng.integers(4, 16))
            land = rugged(n, int(rng.integers(0, n // 2 + 1)), rng)
            cfg = ChainConfig(n_offspring=int(rng.integers(1, 4)), t_init=float(rng.uniform(0.01, 10)),
                              alpha=float(rng.uniform(0.9, 1.0)), budget=100, seed=i,
                              parent_choice=ParentChoice.ELITE if i % 2 else ParentChoice.CURRENT)
            report = check_monotone(run_chain(land, cfg))
            self.assertTrue(report.ok, f"ландшафт {i}: нарушение на {report.first_violation}")


class TestHomogeneity(unittest.TestCase):
    """Тесты однородности ядра перехода."""

    def test_deterministic_kernel(self):
        """Жадная цепь с единственным улучшающим ходом: TV = 0."""
        land = line(2, [1.0, 0.5])
        cfg = ChainConfig(greedy=True, start=0, alpha=1.0, seed=1)
        report = check_homogeneity(land, cfg, (1, 5), (5, 9), samples=50, min_count=1)
        self.assertEqual(report.max_tv, 0.0)
        self.assertTrue(report.per_state)

    def test_frozen_temperature_ring(self):
        """Замороженная T на кольце из 8 состояний: TV < 0.05."""
        land = ring(8, rng=np.random.default_rng(0))
        cfg = ChainConfig(t_init=0.3, alpha=1.0, seed=5)
        report = check_homogeneity(land, cfg, (30, 40), (40, 50), samples=4000, min_count=3000)
        self.assertTrue(report.per_state)
        self.assertLess(report.max_tv, 0.05)

    def test_overlapping_windows(self):
        with self.assertRaises(ChainConfigError):
            check_homogeneity(ring(5), ChainConfig(), (1, 10), (5, 15), samples=10)
        with self.assertRaises(ChainConfigError):
            check_homogeneity(ring(5), ChainConfig(), (0, 10), (10, 15), samples=10)

    @pytest.mark.slow
    def test_cooling_breaks_homogeneity(self):
        """Охлаждение (alpha = 0.9) на ловушке даёт заметно большую TV."""
        land = trap(16, noise=0.05, rng=np.random.default_rng(1))
        frozen = check_homogeneity(land, ChainConfig(t_init=0.5, alpha=1.0, seed=2),
                                   (1, 11), (20, 30), samples=20000, min_count=2000)
        cooled = check_homogeneity(land, ChainConfig(t_init=0.5, alpha=0.9, seed=2),
                                   (1, 11), (20, 30), samples=20000, min_count=2000)
        self.assertGreater(cooled.max_tv, frozen.max_tv + 0.05)


class TestHitProbability(unittest.TestCase):
    """Тесты вероятности попадания в глобальный минимум."""

    def test_star_optimum_always_found(self):
        """Все состояния соседствуют с оптимумом: доля 1."""
        land = star([0.5, 0.7, 0.2, 0.9], center_value=0.0)
        est = estimate_hit_probability(land, ChainConfig(budget=50), n_runs=100)
        self.assertEqual(est.fraction, 1.0)
        self.assertEqual(est.hits, 100)

    def test_hit_curve_monotone(self):
        land = rugged(32, 12, np.random.default_rng(8))
        curve = hit_curve(land, ChainConfig(t_init=1.0, alpha=0.99), 50, [400, 0, 100])
        self.assertEqual([b for b, _ in curve], [0, 100, 400])
        fractions = [est.fraction for _, est in curve]
        self.assertTrue(all(b >= a for a, b in zip(fractions, fractions[1:])))

    def test_wilson_interval(self):
        est = HitEstimate.from_counts(0, 10)
        self.assertEqual(est.fraction, 0.0)
        self.assertAlmostEqual(est.ci_low, 0.0, places=12)
        self.assertGreater(est.ci_high, 0.0)
        with self.assertRaises(ChainConfigError):
            HitEstimate.from_counts(0, 0)

    def test_hitprob_csv(self):
        est = HitEstimate.from_counts(7, 10)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "hitprob.csv")
            write_hitprob_csv(path, [("ring8", "annealed", 100, est)])
            with open(path, newline="", encoding="utf-8") as f:
                rows = list(csv.DictReader(f))
        self.assertEqual(rows[0]["fraction"], "0.7")
        self.assertEqual(rows[0]["hits"], "7")

    def test_greedy_comparison_counts(self):
        traps = [trap(16, noise=0.05, rng=np.random.default_rng(i)) for i in range(3)]
        result = compare_greedy(traps, ChainConfig(budget=200), n_runs=20)
        self.assertEqual(result.wins + result.losses + result.ties, 3)
        self.assertTrue(0.0 <= result.p_value <= 1.0)

    @pytest.mark.slow
    def test_rugged_convergence(self):
        """64 состояния, T=1, alpha=0.999, 5000 итераций: попадание в >= 95% прогонов."""
        land = rugged(64, 32, np.random.default_rng(7))
        cfg = ChainConfig(t_init=1.0, alpha=0.999, budget=5000, seed=0)
        est = estimate_hit_probability(land, cfg, n_runs=1000)
        self.assertGreaterEqual(est.fraction, 0.95)

    @pytest.mark.slow
    def test_annealing_beats_greedy_on_traps(self):
        """Отжиг чаще жадной цепи находит оптимум на ловушках (знаковый тест)."""
        traps = [trap(64, noise=0.05, rng=np.random.default_rng(100 + i)) for i in range(20)]
        cfg = ChainConfig(t_init=1.0, alpha=0.999, budget=3000, seed=1)
        result = compare_greedy(traps, cfg, n_runs=100)
        self.assertGreaterEqual(result.wins, 15)
        self.assertLess(result.p_value, 0.05)


if __name__ == '__main__':
    unittest.main()
