import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from scipy import stats as scipy_stats

from kitti_io.fixtures import MINI_DATASET_DIR
from kitti_io.labels import ObjectLabel, write_label_file

from .cache import load_or_build_stats, read_stats, stats_source
from .exceptions import DimStatsError
from .stats import (
    ClassDimStats, DimStats, estimate_class_stats, sample_dims,
    sample_truncated_normal, scene_rng, truncated_normal_mean,
)


def cyclist(h, w=0.6, l=1.8):
    return ObjectLabel(
        class_name='Cyclist', truncation=0.0, occlusion=0, alpha=0.0,
        bbox2d=(0, 0, 10, 10), dims=(h, w, l), location=(0, 1.6, 10), rotation_y=0.0,
    )


class EstimateClassStatsTest(SimpleTestCase):
    """Tests para estimate_class_stats"""

    def test_two_point_heights(self):
        """Test: Alturas {1.6, 1.8} → μ=1.7, σ=0.1"""
        stats = estimate_class_stats([cyclist(1.6), cyclist(1.8)], 'Cyclist')

        self.assertAlmostEqual(stats.h.mu, 1.7)
        self.assertAlmostEqual(stats.h.sigma, 0.1)
        self.assertEqual((stats.h.a, stats.h.b), (1.6, 1.8))
        self.assertEqual(stats.sample_count, 2)

    def test_single_label(self):
        """Test: Una sola etiqueta → σ=0 y a=b=μ"""
        stats = estimate_class_stats([cyclist(1.75)], 'Cyclist')

        self.assertEqual(stats.h.sigma, 0.0)
        self.assertEqual(stats.h.a, stats.h.mu)
        self.assertEqual(stats.h.b, stats.h.mu)

    def test_no_labels(self):
        """Test: Sin etiquetas de la clase produce error"""
        with self.assertRaises(DimStatsError):
            estimate_class_stats([cyclist(1.7)], 'Pedestrian')

    def test_permutation_invariant(self):
        """Test: El resultado no depende del orden de las etiquetas"""
        rng = np.random.default_rng(1)
        labels = [cyclist(*rng.uniform([1.5, 0.4, 1.5], [1.9, 0.7, 1.9])) for _ in range(50)]
        shuffled = [labels[i] for i in rng.permutation(len(labels))]

        self.assertEqual(estimate_class_stats(labels, 'Cyclist'), estimate_class_stats(shuffled, 'Cyclist'))

    def test_mini_fixture_cyclists(self):
        """Test: Ciclistas del mini-dataset calculados a mano"""
        stats = load_or_build_stats(MINI_DATASET_DIR / 'label_2', ['Cyclist'])['Cyclist']

        self.assertEqual(stats.sample_count, 2)
        for dim, (mu, a, b) in {'h': (1.75, 1.70, 1.80), 'w': (0.55, 0.50, 0.60), 'l': (1.75, 1.70, 1.80)}.items():
            self.assertAlmostEqual(stats.dim(dim).mu, mu)
            self.assertAlmostEqual(stats.dim(dim).sigma, 0.05)
            self.assertEqual((stats.dim(dim).a, stats.dim(dim).b), (a, b))


class TruncatedNormalTest(SimpleTestCase):
    """Tests para sample_truncated_normal"""

    def test_zero_sigma_returns_clamped_mu(self):
        """Test: σ=0 devuelve clamp(μ, a, b)"""
        rng = np.random.default_rng(0)
        self.assertEqual(sample_truncated_normal(1.7, 0.0, 1.5, 1.9, rng), 1.7)
        self.assertEqual(sample_truncated_normal(2.5, 0.0, 1.5, 1.9, rng), 1.9)

    def test_invalid_interval(self):
        """Test: a > b produce error"""
        with self.assertRaises(DimStatsError):
            sample_truncated_normal(0.0, 1.0, 1.0, 0.0, np.random.default_rng(0))

    def test_half_normal_mean(self):
        """Test: N_[0,∞)(0,1) tiene media √(2/π) ≈ 0.7979"""
        samples = sample_truncated_normal(0.0, 1.0, 0.0, math.inf, np.random.default_rng(42), size=100_000)

        self.assertAlmostEqual(math.sqrt(2 / math.pi), 0.7979, places=4)
        self.assertAlmostEqual(float(samples.mean()), 0.7979, delta=0.01)

    def test_draws_inside_interval(self):
        """Test: 10⁵ parametrizaciones aleatorias, todas las muestras en [a, b]"""
        rng = np.random.default_rng(123)
        params = rng.uniform(-5, 5, size=(100_000, 3))
        sigmas = rng.uniform(0.01, 3, size=100_000)
        for (mu, x, y), sigma in zip(params, sigmas):
            a, b = min(x, y), max(x, y)
            value = sample_truncated_normal(mu, sigma, a, b, rng)
            self.assertTrue(a <= value <= b, msg=f"mu={mu} sigma={sigma} a={a} b={b} -> {value}")

    def test_ks_distance(self):
        """Test: Distancia de Kolmogorov ≤ 0.02 frente a la CDF analítica"""
        cases = [
            (0.0, 1.0, -0.5, 2.0),   # rechazo
            (1.7, 0.1, 1.95, 2.3),   # cola superior, CDF inversa
            (0.0, 1.0, -4.0, -3.0),  # cola inferior, CDF inversa
        ]
        rng = np.random.default_rng(8)
        for mu, sigma, a, b in cases:
            samples = sample_truncated_normal(mu, sigma, a, b, rng, size=100_000)
            reference = scipy_stats.truncnorm((a - mu) / sigma, (b - mu) / sigma, loc=mu, scale=sigma)
            result = scipy_stats.kstest(samples, reference.cdf)
            self.assertLessEqual(result.statistic, 0.02, msg=f"{(mu, sigma, a, b)}")

    def test_same_seed_same_stream(self):
        """Test: La misma semilla produce la misma secuencia"""
        first = [sample_truncated_normal(0, 1, -1, 1, np.random.default_rng(5)) for _ in range(3)]
        second = [sample_truncated_normal(0, 1, -1, 1, np.random.default_rng(5)) for _ in range(3)]
        self.assertEqual(first, second)

    def test_scene_rng_depends_on_scene(self):
        """Test: Cada escena tiene su propio flujo, reproducible por semilla"""
        a = scene_rng(7, '000001').random(4)
        b = scene_rng(7, '000001').random(4)
        c = scene_rng(7, '000002').random(4)

        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))


class SampleDimsTest(SimpleTestCase):
    """Tests para sample_dims"""

    def setUp(self):
        """Configuración inicial"""
        self.stats = ClassDimStats(
            class_name='Cyclist',
            h=DimStats(mu=1.74, sigma=0.09, a=1.5, b=2.0),
            w=DimStats(mu=0.6, sigma=0.12, a=0.3, b=0.9),
            l=DimStats(mu=1.76, sigma=0.16, a=1.2, b=2.1),
            sample_count=734,
        )

    def test_degenerate_stats(self):
        """Test: σ=0 en todas las dimensiones devuelve las medias"""
        stats = ClassDimStats(
            class_name='Cyclist',
            h=DimStats(1.7, 0, 1.7, 1.7), w=DimStats(0.6, 0, 0.6, 0.6), l=DimStats(1.8, 0, 1.8, 1.8),
            sample_count=1,
        )
        self.assertEqual(sample_dims(stats, np.random.default_rng(0)), (1.7, 0.6, 1.8))

    def test_means_within_three_standard_errors(self):
        """Test: Medias empíricas dentro de 3 errores estándar de la media analítica"""
        rng = np.random.default_rng(99)
        draws = np.array([sample_dims(self.stats, rng) for _ in range(10_000)])

        for i, dim in enumerate((self.stats.h, self.stats.w, self.stats.l)):
            self.assertTrue(np.all((draws[:, i] >= dim.a) & (draws[:, i] <= dim.b)))
            expected = truncated_normal_mean(dim.mu, dim.sigma, dim.a, dim.b)
            standard_error = draws[:, i].std() / math.sqrt(len(draws))
            self.assertLess(abs(draws[:, i].mean() - expected), 3 * standard_error + 1e-12)

    def test_analytic_mean_matches_scipy(self):
        """Test: La media analítica coincide con scipy"""
        d = self.stats.w
        reference = scipy_stats.truncnorm((d.a - d.mu) / d.sigma, (d.b - d.mu) / d.sigma, loc=d.mu, scale=d.sigma)
        self.assertAlmostEqual(truncated_normal_mean(d.mu, d.sigma, d.a, d.b), reference.mean(), places=9)


class StatsCacheTest(SimpleTestCase):
    """Tests para la caché JSON de estadísticas"""

    def test_cache_round_trip(self):
        """Test: La caché se escribe y se lee con los mismos valores"""
        with tempfile.TemporaryDirectory() as tmp:
            cache = Path(tmp) / 'dims.json'
            label_dir = MINI_DATASET_DIR / 'label_2'
            built = load_or_build_stats(label_dir, ['Cyclist', 'Pedestrian'], cache)

            self.assertTrue(cache.exists())
            self.assertEqual(read_stats(cache), built)
            self.assertEqual(load_or_build_stats(label_dir, ['Cyclist'], cache)['Cyclist'], built['Cyclist'])

    def test_other_label_dir_rebuilds(self):
        """Test: Una caché de otro directorio de etiquetas no se reutiliza"""
        with tempfile.TemporaryDirectory() as tmp:
            cache = Path(tmp) / 'dims.json'
            other = Path(tmp) / 'other' / 'label_2'
            write_label_file([cyclist(3.0)], other / '000000.txt')

            load_or_build_stats(MINI_DATASET_DIR / 'label_2', ['Cyclist'], cache)
            rebuilt = load_or_build_stats(other, ['Cyclist'], cache)

            self.assertAlmostEqual(rebuilt['Cyclist'].h.mu, 3.0)
            self.assertEqual(rebuilt['Cyclist'].sample_count, 1)

    def test_other_split_rebuilds(self):
        """Test: Cambiar el split invalida la caché"""
        with tempfile.TemporaryDirectory() as tmp:
            cache = Path(tmp) / 'dims.json'
            label_dir = MINI_DATASET_DIR / 'label_2'
            full = load_or_build_stats(label_dir, ['Cyclist'], cache)
            subset = load_or_build_stats(label_dir, ['Cyclist'], cache, ids=['000002'])

            self.assertNotEqual(subset['Cyclist'].sample_count, full['Cyclist'].sample_count)
            self.assertEqual(stats_source(label_dir, ['b', 'a']), stats_source(label_dir, ['a', 'b']))

    def test_invalid_cache(self):
        """Test: Una caché con a > μ se rechaza"""
        with tempfile.TemporaryDirectory() as tmp:
            cache = Path(tmp) / 'dims.json'
            cache.write_text(
                '{"classes": [{"class_name": "Cyclist", "sample_count": 2,'
                ' "h": {"mu": 1.0, "sigma": 0.1, "a": 2.0, "b": 3.0},'
                ' "w": {"mu": 1.0, "sigma": 0.1, "a": 0.5, "b": 3.0},'
                ' "l": {"mu": 1.0, "sigma": 0.1, "a": 0.5, "b": 3.0}}]}'
            )
            with self.assertRaises(DimStatsError):
                read_stats(cache)
