import math

import numpy as np
from django.test import SimpleTestCase
from django.test import override_settings
from symbolic.dsl import parse_system
from symbolic.lie import lie_basis
from symbolic.volume import build_profile

from ..gamma import GammaGrushin
from ..gamma import calibrate_gamma0
from ..potential import MeanValueOperators
from ..potential import TEST_FUNCTIONS
from ..potential import fitted_doubling_constant
from ..potential import sample_function
from ..potential import surface_mean
from ..quadrature import QuadratureSpec

GRUSHIN = "dim = 2\nweights = [1, 2]\nfield X1 = (1, 0)\nfield X2 = (0, x1)\n"


class TestSampleFunctions(SimpleTestCase):
    def test_lookup(self):
        u = sample_function("y1y2")
        self.assertEqual(float(u(np.array([2.0, 3.0]))), 6.0)
        self.assertIs(sample_function(TEST_FUNCTIONS["1"]), TEST_FUNCTIONS["1"])
        self.assertEqual(set(TEST_FUNCTIONS), {"1", "y1", "y2", "y1y2", "y1^2", "y2^2"})

    def test_unknown(self):
        with self.assertRaises(ValueError):
            sample_function("y3")

    def test_sublaplacian(self):
        # L = ∂1² + x1²∂2²
        p = np.array([[1.5, -2.0]])
        self.assertEqual(float(TEST_FUNCTIONS["y2^2"].lu(p)[0]), 4.5)
        self.assertEqual(float(TEST_FUNCTIONS["y1^2"].lu(p)[0]), 2.0)
        self.assertEqual(float(TEST_FUNCTIONS["y1y2"].lu(p)[0]), 0.0)


class TestMeanValueOperators(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        quad = QuadratureSpec(rel_tol=1e-7, max_levels=6)
        cls.gamma = GammaGrushin(calibrate_gamma0(quad=quad).gamma0)
        cls.operators = MeanValueOperators(cls.gamma, alpha=3.0)

    def test_contour_mesh_setting(self):
        with override_settings(CONTOUR_MESH=96):
            operators = MeanValueOperators(self.gamma)
        self.assertEqual(operators.mesh, 96)
        self.assertEqual(operators.level_set((0.0, 0.0), 1.0, 1).mesh, 192)
        self.assertEqual(MeanValueOperators(self.gamma, mesh=64).mesh, 64)

    def test_surface_mean_beats_fixed_mesh(self):
        pole, r = (0.0, 0.0), 1.0
        coarse = surface_mean(
            self.gamma,
            self.operators.level_set(pole, r),
            TEST_FUNCTIONS["1"],
        )
        refined = self.operators.m_r("1", pole, r)
        self.assertLess(abs(refined - 1.0), abs(coarse - 1.0))
        self.assertAlmostEqual(refined, 1.0, delta=2.5e-4)

    def test_alpha_range(self):
        with self.assertRaises(ValueError):
            MeanValueOperators(self.gamma, alpha=2.0)

    def test_means_of_constants(self):
        for pole, r in (((0.0, 0.0), 1.0), ((1.0, 0.0), 2.0)):
            self.assertAlmostEqual(self.operators.m_r("1", pole, r), 1.0, delta=1e-3)
            self.assertAlmostEqual(self.operators.M_r("1", pole, r), 1.0, delta=1e-3)

    def test_means_of_harmonic_functions(self):
        pole, r = (0.5, 0.25), 1.0
        self.assertAlmostEqual(self.operators.m_r("y1", pole, r), 0.5, delta=1e-3)
        self.assertAlmostEqual(self.operators.m_r("y2", pole, r), 0.25, delta=1e-3)
        self.assertAlmostEqual(self.operators.M_r("y1", pole, r), 0.5, delta=1e-3)

    def test_subharmonic_mean_exceeds_value(self):
        pole, r = (0.5, 0.0), 1.0
        self.assertGreater(self.operators.m_r("y1^2", pole, r), 0.25)

    def test_gauss_green(self):
        check = self.operators.gauss_green((0.0, 0.0), 1.0)
        self.assertGreater(check["two_q_r"], 0)
        self.assertLess(check["relative_residual"], 1e-2)

    def test_negligible_level_sets(self):
        # log pole: Ω_r shrinks like exp(−1/(γ₀r))
        pole = (1.0, 0.0)
        self.assertTrue(self.operators.negligible(pole, 0.01))
        self.assertEqual(self.operators.m_r("y1", pole, 0.01), 1.0)
        self.assertEqual(self.operators.M_r("y1^2", pole, 0.01), 1.0)
        self.assertEqual(self.operators.q_r(pole, 0.01), 0.0)
        self.assertFalse(self.operators.negligible((0.0, 0.0), 0.01))

    def test_deficits_are_positive(self):
        deficits = self.operators.deficit_functionals((0.0, 0.0), 1.0, steps=8)
        self.assertGreater(deficits.q, 0)
        self.assertGreater(deficits.Q, 0)
        self.assertGreater(deficits.omega, 0)
        self.assertEqual(len(deficits.q_profile), 9)
        self.assertEqual(deficits.q_profile[0], (0.0, 0.0))

    def test_inclusion(self):
        theta = self.operators.inclusion_theta((0.0, 0.0), 1.0)
        self.assertTrue(0 < theta < math.inf)


class TestDoublingConstant(SimpleTestCase):
    def test_stable(self):
        spec = parse_system(GRUSHIN)
        profile = build_profile(spec, lie_basis(spec))
        fitted = fitted_doubling_constant(profile, (1.0, 0.0), [0.01, 0.1, 1.0, 10.0])
        self.assertTrue(fitted["stable"])
        self.assertGreater(fitted["c"], 0)
        self.assertEqual(len(fitted["ratios"]), 4)
