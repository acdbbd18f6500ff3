import os

import numpy as np
from django.test import SimpleTestCase
from symbolic.dsl import load_system

from ..distance import DistanceOptimizer
from ..distance import DistanceOptions
from ..distance import distance_upper_bound
from ..distance import grushin_distance_surrogate
from ..distance import hom_norm
from ..distance import surrogate_sphere

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "..", "symbolic", "tests", "samples")

FAST = DistanceOptions(segments=4, restarts=2, budget=600, n_jobs=1)


def sample(name):
    return load_system(os.path.join(SAMPLES, f"{name}.hvf"))


class TestSurrogate(SimpleTestCase):
    def test_values(self):
        self.assertEqual(grushin_distance_surrogate([0, 0], [0, 4]), 2.0)
        self.assertEqual(grushin_distance_surrogate([1, 0], [3, 0]), 2.0)
        self.assertEqual(grushin_distance_surrogate([1, 1], [1, 1]), 0.0)

    def test_homogeneity(self):
        x, y = np.array([0.3, -0.2]), np.array([-0.5, 0.7])
        lam = 3.0
        scale = np.array([lam, lam * lam])
        self.assertAlmostEqual(
            grushin_distance_surrogate(x * scale, y * scale),
            lam * grushin_distance_surrogate(x, y),
            delta=1e-12,
        )

    def test_sphere(self):
        x = np.array([0.5, -1.0])
        sphere = surrogate_sphere(x, 0.25, count=16)
        self.assertEqual(sphere.shape, (32, 2))
        np.testing.assert_allclose(grushin_distance_surrogate(x, sphere), 0.25, rtol=1e-12)

    def test_hom_norm(self):
        self.assertEqual(hom_norm([1, 2], [1, 4]), 3.0)
        self.assertEqual(hom_norm([1, 2], [-2, -9]), 5.0)
        np.testing.assert_allclose(hom_norm([1, 1], [[1, 1], [0, 2]]), [2.0, 2.0])


class TestDistanceOptimizer(SimpleTestCase):
    def test_euclidean_plane_sup_norm(self):
        result = distance_upper_bound(sample("euclid2"), [0, 0], [3, 4], FAST)
        self.assertAlmostEqual(result.r, 4.0, delta=1e-3)
        self.assertLess(result.endpoint_error, 1e-6)

    def test_euclidean_plane_euclidean_norm(self):
        options = DistanceOptions(
            segments=4,
            restarts=2,
            budget=600,
            n_jobs=1,
            control_norm="euclidean",
        )
        result = distance_upper_bound(sample("euclid2"), [0, 0], [3, 4], options)
        self.assertAlmostEqual(result.r, 5.0, delta=1e-3)

    def test_grushin_horizontal_segment(self):
        result = distance_upper_bound(sample("grushin1"), [0, 0], [1, 0], FAST)
        self.assertAlmostEqual(result.r, 1.0, delta=1e-3)
        self.assertEqual(result.path.controls.shape, (4, 2))
        self.assertEqual(result.path.header(), ["segment", "t_start", "t_end", "a1", "a2"])
        self.assertEqual(len(result.path.rows()), 4)

    def test_never_below_surrogate_scale(self):
        x, y = [0.5, 0.0], [0.2, 0.3]
        result = distance_upper_bound(sample("grushin1"), x, y, FAST)
        ratio = result.r / grushin_distance_surrogate(x, y)
        self.assertTrue(0.25 <= ratio <= 4, ratio)

    def test_integrators_agree(self):
        spec = sample("grushin1")
        controls = np.array([[1.0, 0.5], [-0.3, 2.0]])
        flow = DistanceOptimizer(spec, DistanceOptions(integrator="flow"))
        rk4 = DistanceOptimizer(spec, DistanceOptions(integrator="rk4"))
        np.testing.assert_allclose(
            flow.endpoint([0.2, 0.1], controls),
            rk4.endpoint([0.2, 0.1], controls),
            atol=1e-12,
        )

    def test_drift_controls(self):
        spec = sample("drift_grushin1")
        optimizer = DistanceOptimizer(spec, DistanceOptions(drift=True))
        self.assertEqual(optimizer.width, 2)
        with self.assertRaises(ValueError):
            DistanceOptimizer(sample("grushin1"), DistanceOptions(drift=True))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            DistanceOptions(integrator="euler")
        with self.assertRaises(ValueError):
            DistanceOptions(control_norm="l1")
        with self.assertRaises(ValueError):
            distance_upper_bound(sample("grushin1"), [1, 1], [1, 1], FAST)
