import math

import numpy as np
from django.test import override_settings
from django.test import SimpleTestCase

from ..quadrature import QuadratureError
from ..quadrature import QuadratureSpec
from ..quadrature import compactified_quad
from ..quadrature import gauss_legendre
from ..quadrature import periodic_nodes
from ..quadrature import refine_until
from ..quadrature import to_compact


class TestQuadrature(SimpleTestCase):
    def test_compactified_integral(self):
        value, error = compactified_quad(lambda t: 1.0 / (1.0 + t * t), QuadratureSpec())
        self.assertAlmostEqual(value, math.pi, delta=1e-8)
        self.assertLess(error, 1e-6)

    def test_breakpoints(self):
        value, _ = compactified_quad(
            lambda t: 1.0 / (1e-4 + (t - 3.0) ** 2),
            QuadratureSpec(rel_tol=1e-9),
            points=[3.0],
        )
        self.assertAlmostEqual(value, math.pi / 1e-2, delta=1e-4)

    def test_to_compact(self):
        for eta in (-50.0, -1.0, 0.0, 0.3, 7.0):
            s = to_compact(eta)
            self.assertTrue(-1 < s < 1)
            self.assertAlmostEqual(s / (1 - s * s), eta, delta=1e-9 * max(1, abs(eta)))

    def test_gauss_legendre(self):
        x, w = gauss_legendre(4, 0.0, 2.0)
        self.assertAlmostEqual(float(np.sum(w * x**3)), 4.0, delta=1e-13)

    def test_periodic_nodes(self):
        theta, w = periodic_nodes(32)
        self.assertAlmostEqual(float(np.sum(w * np.cos(theta) ** 2)), math.pi, delta=1e-13)

    def test_refine_until(self):
        value, error = refine_until(lambda level: 1.0 + 2.0 ** (-10 * level), QuadratureSpec())
        self.assertAlmostEqual(value, 1.0, delta=1e-8)
        self.assertLess(error, 1e-8)

    def test_refine_until_extrapolates(self):
        def second_order(level):
            return 1.0 + 0.1 * 4.0 ** (-level)

        spec = QuadratureSpec(rel_tol=1e-3)
        plain, _ = refine_until(second_order, spec)
        self.assertGreater(plain - 1.0, 1e-5)
        value, error = refine_until(second_order, spec, order=2)
        self.assertAlmostEqual(value, 1.0, delta=1e-12)
        self.assertLess(error, 1e-3)

    def test_refine_until_fails(self):
        with self.assertRaises(QuadratureError) as cm:
            refine_until(float, QuadratureSpec(max_levels=3), what="divergent sum")
        self.assertEqual(cm.exception.estimate, 1.0)
        self.assertIn("divergent sum", str(cm.exception))

    @override_settings(QUAD_REL_TOL=1e-5)
    def test_from_settings(self):
        spec = QuadratureSpec.from_settings(abs_tol=None, limit=50)
        self.assertEqual(spec.rel_tol, 1e-5)
        self.assertEqual(spec.limit, 50)
        self.assertTrue(spec.accepts(1.0, 1e-6))
        self.assertFalse(spec.accepts(1.0, 1e-4))
