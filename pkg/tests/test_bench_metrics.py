"""
Тесты метрик классификации, оракула покрытия мод и классификатора CN.
"""

import unittest
import os
import sys

import numpy as np

# Добавляем путь к src для импорта
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from bench import (
    Dataset,
    MixtureSpec,
    ClassifierConfig,
    ClassifierError,
    train_classifier,
    metrics_from_predictions,
    metrics_from_confusion,
    evaluate,
    assign_modes,
    mode_coverage,
    symmetric_kl,
    ring_spec,
    BenchArgumentError,
)


class TestMetrics(unittest.TestCase):
    """Тесты метрик по предсказаниям и матрице ошибок."""

    def test_all_majority_predictions(self):
        m = metrics_from_predictions([0] * 5 + [1] * 5, [0] * 10, classes=(0, 1))
        self.assertAlmostEqual(m.accuracy, 0.5)
        self.assertEqual(m.recall, {0: 1.0, 1: 0.0})
        self.assertEqual(m.precision[1], 0.0)
        self.assertEqual(m.f1[1], 0.0)
        self.assertAlmostEqual(m.precision[0], 0.5)
        self.assertAlmostEqual(m.f1[0], 2 / 3)
        np.testing.assert_array_equal(m.confusion, [[5, 0], [5, 0]])

    def test_from_confusion(self):
        m = metrics_from_confusion(np.array([[8, 2], [1, 9]]), classes=(0, 1))
        self.assertAlmostEqual(m.accuracy, 17 / 20)
        self.assertAlmostEqual(m.precision[1], 9 / 11)
        self.assertAlmostEqual(m.recall[1], 9 / 10)
        self.assertAlmostEqual(m.f1[1], 2 * (9 / 11) * 0.9 / (9 / 11 + 0.9))
        self.assertEqual(m.support, {0: 10, 1: 10})

    def test_three_classes(self):
        m = metrics_from_predictions([0, 1, 2, 2], [0, 2, 2, 1], classes=(0, 1, 2))
        self.assertAlmostEqual(m.accuracy, 0.5)
        self.assertEqual(m.recall[1], 0.0)
        self.assertAlmostEqual(m.recall[2], 0.5)

    def test_class_absent_from_predictions_and_truth(self):
        m = metrics_from_predictions([0, 0], [0, 0], classes=(0, 1))
        self.assertEqual(m.f1[1], 0.0)
        self.assertEqual(m.support[1], 0)

    def test_bad_inputs(self):
        with self.assertRaises(BenchArgumentError):
            metrics_from_predictions([], [], classes=(0, 1))
        with self.assertRaises(BenchArgumentError):
            metrics_from_confusion(np.array([[1, -1], [0, 1]]), classes=(0, 1))
        with self.assertRaises(BenchArgumentError):
            metrics_from_confusion(np.eye(3), classes=(0, 1))

    def test_with_coverage(self):
        m = metrics_from_predictions([0, 1], [0, 1], classes=(0, 1))
        self.assertIsNone(m.covered_modes)
        covered = m.with_coverage(7, 0.9, 0.1)
        self.assertEqual(covered.covered_modes, 7)
        self.assertEqual(covered.accuracy, 1.0)


class TestCoverage(unittest.TestCase):
    """Тесты оракула покрытия."""

    def setUp(self):
        self.spec = ring_spec(8, 2.0, 0.02)

    def test_true_mixture_covers_all_modes(self):
        samples, _ = self.spec.sample(8000, np.random.default_rng(0))
        report = mode_coverage(samples, self.spec)
        self.assertEqual(report.covered, 8)
        # доля точек внутри 3 sigma для двумерной гауссианы: 1 - exp(-4.5)
        self.assertGreater(report.hq_ratio, 0.98)
        self.assertEqual(sum(report.per_mode), int(round(report.hq_ratio * 8000)))

    def test_collapsed_samples_cover_one_mode(self):
        samples = np.tile(self.spec.means[3], (500, 1))
        report = mode_coverage(samples, self.spec)
        self.assertEqual(report.covered, 1)
        self.assertEqual(report.per_mode[3], 500)
        self.assertEqual(report.hq_ratio, 1.0)

    def test_far_samples_are_low_quality(self):
        samples = np.full((100, 2), 50.0)
        report = mode_coverage(samples, self.spec)
        self.assertEqual(report.covered, 0)
        self.assertEqual(report.hq_ratio, 0.0)

    def test_min_per_mode_threshold(self):
        samples = np.vstack([np.tile(self.spec.means[0], (19, 1)), np.tile(self.spec.means[1], (20, 1))])
        self.assertEqual(mode_coverage(samples, self.spec, min_per_mode=20).covered, 1)
        self.assertEqual(mode_coverage(samples, self.spec, min_per_mode=19).covered, 2)

    def test_kl_orders_collapse_above_fit(self):
        rng = np.random.default_rng(1)
        good, _ = self.spec.sample(4000, rng)
        collapsed = self.spec.means[0] + 0.02 * rng.standard_normal((4000, 2))
        kl_good = symmetric_kl(good, self.spec)
        kl_bad = symmetric_kl(collapsed, self.spec)
        self.assertGreaterEqual(kl_good, 0.0)
        self.assertLess(kl_good, kl_bad)

    def test_kl_undefined_above_two_dimensions(self):
        spec = MixtureSpec(np.zeros((1, 3)), 1.0)
        self.assertTrue(np.isnan(symmetric_kl(np.zeros((5, 3)), spec)))

    def test_assign_modes_nearest(self):
        nearest, distance = assign_modes(np.array([[2.0, 0.0], [0.0, 2.1]]), self.spec)
        self.assertEqual(nearest.tolist(), [0, 2])
        np.testing.assert_allclose(distance, [0.0, 0.1], atol=1e-12)

    def test_bad_samples(self):
        with self.assertRaises(BenchArgumentError):
            mode_coverage(np.zeros((0, 2)), self.spec)
        with self.assertRaises(BenchArgumentError):
            mode_coverage(np.zeros((4, 3)), self.spec)


class TestClassifier(unittest.TestCase):
    """Тесты классификатора CN."""

    def blobs(self, n=200, seed=0):
        rng = np.random.default_rng(seed)
        features = np.vstack([rng.normal(-2.0, 0.3, (n, 2)), rng.normal(2.0, 0.3, (n, 2))])
        return Dataset(features, [0] * n + [1] * n)

    def test_separable_blobs(self):
        train = self.blobs()
        classifier = train_classifier(train, ClassifierConfig(epochs=30, seed=1))
        metrics = evaluate(classifier, self.blobs(seed=5))
        self.assertGreater(metrics.accuracy, 0.95)
        probs = classifier.predict_proba(train.features[:3])
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_deterministic(self):
        train = self.blobs(n=50)
        cfg = ClassifierConfig(epochs=5, seed=3)
        a = train_classifier(train, cfg)
        b = train_classifier(train, cfg)
        self.assertEqual(a.params.checksum(), b.params.checksum())

    def test_predict_uses_class_labels(self):
        train = Dataset(self.blobs(n=50).features, [4] * 50 + [9] * 50)
        classifier = train_classifier(train, ClassifierConfig(epochs=20, seed=0))
        self.assertTrue(set(classifier.predict(train.features).tolist()) <= {4, 9})

    def test_rejects_degenerate_training_sets(self):
        with self.assertRaises(ClassifierError):
            train_classifier(Dataset(np.zeros((4, 2)), [0] * 4), ClassifierConfig())
        with self.assertRaises(ClassifierError):
            train_classifier(Dataset(np.zeros((4, 2)), [0] * 4, classes=(0, 1)), ClassifierConfig())
        with self.assertRaises(ClassifierError):
            ClassifierConfig(epochs=0)


if __name__ == '__main__':
    unittest.main()
