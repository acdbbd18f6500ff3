import math

import numpy as np
from django.test import SimpleTestCase

from ..contour import LevelSetExtractor
from ..contour import extract_level_set
from ..contour import outer_radius
from ..distance import grushin_distance_surrogate
from ..gamma import GammaGrushin

GAMMA = GammaGrushin(1 / (2 * math.pi))


class TestLevelSets(SimpleTestCase):
    def check_level_set(self, pole, r):
        level_set = extract_level_set(GAMMA, pole, r, mesh=96)
        values = GAMMA.closed_form(np.asarray(pole, dtype=float), level_set.vertices)
        np.testing.assert_allclose(values, level_set.level, rtol=1e-6)
        self.assertEqual(len(level_set.loops), 1)
        self.assertGreater(level_set.area, 0)
        self.assertGreater(level_set.perimeter, 0)
        self.assertTrue(level_set.contains([pole])[0])
        far = np.asarray(pole) + np.array([10 * level_set.max_surrogate_distance(), 0])
        self.assertFalse(level_set.contains([far])[0])
        return level_set

    def test_origin(self):
        level_set = self.check_level_set((0.0, 0.0), 1.0)
        # symmetric under y1 -> -y1 and y2 -> -y2
        self.assertAlmostEqual(
            np.max(level_set.vertices[:, 0]),
            -np.min(level_set.vertices[:, 0]),
            delta=1e-6,
        )

    def test_off_axis_pole(self):
        self.check_level_set((1.0, 0.0), 2.0)

    def test_to_dict(self):
        data = extract_level_set(GAMMA, (0.0, 0.0), 1.0, mesh=64).to_dict()
        self.assertEqual(data["pole"], [0.0, 0.0])
        self.assertEqual(data["level"], 1.0)
        self.assertEqual(data["loops"], 1)
        self.assertEqual(data["mesh"], 64)

    def test_level_sets_grow_with_r(self):
        small = extract_level_set(GAMMA, (0.0, 0.0), 0.5, mesh=64)
        large = extract_level_set(GAMMA, (0.0, 0.0), 1.0, mesh=64)
        self.assertLess(small.area, large.area)
        self.assertTrue(np.all(large.contains(small.vertices * 0.99)))

    def test_outer_radius(self):
        pole = np.zeros(2)
        rho = outer_radius(GAMMA, pole, 1.0)
        level_set = extract_level_set(GAMMA, pole, 1.0, mesh=64)
        self.assertGreaterEqual(
            rho,
            np.max(grushin_distance_surrogate(pole, level_set.vertices)) * (1 - 1e-9),
        )

    def test_invalid_radius(self):
        with self.assertRaises(ValueError):
            LevelSetExtractor(GAMMA, mesh=32).extract((0.0, 0.0), 0.0)
