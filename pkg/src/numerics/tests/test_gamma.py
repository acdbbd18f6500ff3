import math
import os

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st
from symbolic.dsl import load_system
from symbolic.lifting import build_lift

from ..distance import surrogate_sphere
from ..elliptic import elliptic_K
from ..gamma import Bump
from ..gamma import GammaGrushin
from ..gamma import PoleError
from ..gamma import calibrate_gamma0
from ..gamma import gamma_G_heis
from ..gamma import parse_word
from ..gamma import phi_change_of_variable
from ..gamma import phi_identity_holds
from ..gamma import phi_jacobian
from ..gamma import render_word
from ..quadrature import QuadratureSpec
from ..sampling import PairGrid
from ..sampling import dilate
from ..systems import UnsupportedSystemError

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "..", "symbolic", "tests", "samples")

QUAD = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-14, limit=400)


def sample(name):
    return load_system(os.path.join(SAMPLES, f"{name}.hvf"))


class TestHeisenbergKernel(SimpleTestCase):
    def test_values(self):
        self.assertEqual(gamma_G_heis([1.0, 0.0, 0.0]), 1.0)
        self.assertEqual(gamma_G_heis([0.0, 1.0, 0.0], gamma0=2.0), 0.5)

    def test_homogeneity(self):
        z = np.array([0.3, -0.7, 1.1])
        lam = 2.5
        scaled = z * np.array([lam, lam * lam, lam])
        self.assertAlmostEqual(gamma_G_heis(scaled) * lam**2, gamma_G_heis(z), delta=1e-14)

    def test_pole(self):
        with self.assertRaises(PoleError):
            gamma_G_heis([0.0, 0.0, 0.0])


class TestClosedForm(SimpleTestCase):
    def setUp(self):
        self.gamma = GammaGrushin()

    def test_saturation_agreement(self):
        x, y, _ = PairGrid(count=20, seed=0).pairs()
        for a, b in zip(x, y):
            closed = self.gamma.closed_form(a, b)
            saturated = self.gamma.saturation(a, b, QUAD)
            self.assertAlmostEqual(saturated / closed, 1.0, delta=1e-6, msg=f"{a}, {b}")

    def test_reference_pair(self):
        closed = self.gamma.closed_form([1.0, 0.0], [0.0, 1.0])
        self.assertAlmostEqual(
            self.gamma.saturation([1.0, 0.0], [0.0, 1.0], QUAD) / closed,
            1.0,
            delta=1e-6,
        )

    def test_axis_reduction(self):
        x2, y = 0.4, np.array([0.7, -0.2])
        expected = math.sqrt(2) * elliptic_K(0.5) * (y[0] ** 4 + 4 * (x2 - y[1]) ** 2) ** -0.25
        self.assertAlmostEqual(self.gamma.closed_form([0.0, x2], y), expected, delta=1e-13)

    def test_symmetry_and_homogeneity(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-2, 2, (1000, 2))
        y = rng.uniform(-2, 2, (1000, 2))
        lam = np.exp(rng.uniform(-3, 3, 1000))
        closed = self.gamma.closed_form(x, y)
        np.testing.assert_allclose(self.gamma.closed_form(y, x), closed, rtol=1e-8)
        scaled = np.array(
            [self.gamma.closed_form(dilate(a, s), dilate(b, s)) for a, b, s in zip(x, y, lam)],
        )
        np.testing.assert_allclose(scaled * lam, closed, rtol=1e-8)
        self.assertTrue(np.all(closed > 0))

    def test_elliptic_parameter_range(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-3, 3, (100000, 2))
        y = rng.uniform(-3, 3, (100000, 2))
        m = self.gamma.elliptic_parameter(x, y)
        positive = x[:, 0] * y[:, 0] > 0
        self.assertTrue(np.all((m[positive] > 0) & (m[positive] < 1)))
        self.assertTrue(np.all((m[~positive] > -1) & (m[~positive] <= 0.5)))

    def test_pole(self):
        with self.assertRaises(PoleError):
            self.gamma.closed_form([1.0, 2.0], [1.0, 2.0])
        with self.assertRaises(PoleError):
            self.gamma.saturation([1.0, 2.0], [1.0, 2.0])

    def test_gradient(self):
        x, y = np.array([1.0, 0.2]), np.array([0.5, 0.7])
        h = 1e-6
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd = (self.gamma.closed_form(x, y + e) - self.gamma.closed_form(x, y - e)) / (2 * h)
            self.assertAlmostEqual(self.gamma.gradient_y(x, y)[k] / fd, 1.0, delta=1e-6)

    def test_pole_radius(self):
        pole = np.array([1.0, 0.0])
        radius = self.gamma.pole_radius(pole, threshold=10.0)
        self.assertGreater(radius, 0)
        inside = self.gamma.closed_form(pole, surrogate_sphere(pole, 0.5 * radius))
        self.assertTrue(np.all(inside >= 10.0))

    def test_decay(self):
        profile = self.gamma.decay_profile([1.0, 0.0], [1.0, 1.0], np.logspace(0.5, 2, 6))
        first = [g for _, _, g in profile]
        self.assertTrue(all(b < a for a, b in zip(first, first[1:])))


class TestDerivatives(SimpleTestCase):
    def setUp(self):
        self.gamma = GammaGrushin.for_system(sample("grushin1"))

    def test_words(self):
        self.assertEqual(parse_word("X1^x X2^y"), (("x", 1), ("y", 2)))
        self.assertEqual(parse_word("X1x*X2y"), (("x", 1), ("y", 2)))
        self.assertEqual(render_word((("y", 1),)), "X1^y")
        with self.assertRaises(ValueError):
            parse_word("X3^x")

    def test_first_order(self):
        value = self.gamma.derivative([1.0, 0.0], [2.0, 0.0], parse_word("X1^y"), QUAD)
        self.assertLess(value.relative_difference, 1e-4)
        value = self.gamma.derivative([1.0, 0.2], [0.5, 0.7], parse_word("X2^y"), QUAD)
        self.assertLess(value.relative_difference, 1e-4)
        value = self.gamma.derivative([1.0, 0.2], [0.5, 0.7], parse_word("X1^x"), QUAD)
        self.assertLess(value.relative_difference, 1e-4)

    def test_mixed(self):
        value = self.gamma.derivative([1.0, 0.2], [0.5, 0.7], parse_word("X1^x X2^y"), QUAD)
        self.assertLess(value.relative_difference, 1e-3)

    def test_horizontal_gradient(self):
        x, y = [1.0, 0.2], [0.5, 0.7]
        analytic = self.gamma.horizontal_y(x, y)
        fd = self.gamma.derivative_finite_difference(x, y, parse_word("X2^y"))
        self.assertAlmostEqual(analytic[1] / fd, 1.0, delta=1e-6)

    def test_kernel_is_harmonic(self):
        self.assertTrue(self.gamma.kernel_is_harmonic())

    def test_other_systems(self):
        with self.assertRaises(UnsupportedSystemError):
            GammaGrushin.for_system(sample("chain3"))


class TestCalibration(SimpleTestCase):
    def test_calibration(self):
        quad = QuadratureSpec(rel_tol=1e-7, max_levels=6)
        result = calibrate_gamma0(quad=quad)
        self.assertGreater(result.gamma0, 0)
        self.assertLess(result.max_residual, 1e-3)

        doubled = calibrate_gamma0(quad=quad, bump=Bump(amplitude=2.0))
        self.assertAlmostEqual(doubled.gamma0 / result.gamma0, 1.0, delta=1e-12)

        moved = calibrate_gamma0(quad=quad, reference=(1.1, 0.05))
        self.assertAlmostEqual(moved.gamma0 / result.gamma0, 1.0, delta=1e-3)


class TestChangeOfVariables(SimpleTestCase):
    def setUp(self):
        self.lift = build_lift(sample("grushin1"))

    def test_identity(self):
        self.assertTrue(phi_identity_holds(self.lift))

    def test_jacobian(self):
        self.assertEqual(phi_jacobian(self.lift).constant_term(), -1)
        self.assertTrue(phi_jacobian(self.lift).is_constant())

    def test_origin(self):
        self.assertEqual(phi_change_of_variable(self.lift, [0, 0], [0, 0], [3]), (-3,))


coordinates = st.integers(-200, 200).map(lambda k: k / 100)


@hypothesis_settings(max_examples=30, deadline=None)
@given(st.tuples(coordinates, coordinates), st.tuples(coordinates, coordinates))
def test_gamma_is_positive_and_symmetric(x, y):
    if x == y:
        return
    gamma = GammaGrushin()
    value = gamma.closed_form(x, y)
    assert value > 0
    assert math.isclose(value, gamma.closed_form(y, x), rel_tol=1e-9)
