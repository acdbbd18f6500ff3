import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import example
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from ..elliptic import elliptic_E
from ..elliptic import elliptic_K
from ..elliptic import elliptic_K_derivative
from ..elliptic import elliptic_K_quadrature


class TestEllipticK(SimpleTestCase):
    def test_origin(self):
        self.assertAlmostEqual(elliptic_K(0.0), math.pi / 2, delta=1e-12)
        self.assertAlmostEqual(elliptic_E(0.0), math.pi / 2, delta=1e-12)

    def test_known_values(self):
        self.assertAlmostEqual(elliptic_K(0.5), 1.8540746773013719, delta=1e-12)
        self.assertAlmostEqual(elliptic_E(0.5), 1.3506438810476755, delta=1e-12)

    def test_agm_matches_quadrature(self):
        for m in np.linspace(-0.9, 0.99, 12):
            self.assertAlmostEqual(
                elliptic_K(m) / elliptic_K_quadrature(m),
                1.0,
                delta=1e-10,
                msg=f"m = {m}",
            )

    def test_logarithmic_singularity(self):
        m1 = 1e-12
        value = elliptic_K(1 - m1, m1=m1)
        self.assertAlmostEqual(value, math.log(4) - 0.5 * math.log(m1), delta=1e-9)
        ratio = (value - math.log(4)) / (-0.5 * math.log(m1))
        self.assertTrue(0.95 <= ratio <= 1.05)

    def test_arrays(self):
        m = np.array([0.0, 0.5, -0.5])
        values = elliptic_K(m)
        self.assertEqual(values.shape, (3,))
        self.assertAlmostEqual(values[1], elliptic_K(0.5))

    def test_derivative(self):
        self.assertAlmostEqual(elliptic_K_derivative(0.0), math.pi / 8, delta=1e-12)
        for m in (-0.5, 0.3, 0.9):
            h = 1e-6
            fd = (elliptic_K(m + h) - elliptic_K(m - h)) / (2 * h)
            self.assertAlmostEqual(elliptic_K_derivative(m) / fd, 1.0, delta=1e-6)

    def test_domain(self):
        for m in (1.0, -1.0, 1.5, float("nan")):
            with self.assertRaises(ValueError):
                elliptic_K(m)


@hypothesis_settings(max_examples=50, deadline=None)
@given(
    st.floats(min_value=-0.95, max_value=0.95),
    st.floats(min_value=-0.95, max_value=0.95),
)
@example(-3.66e-22, 0.0)
def test_K_is_increasing(a, b):
    if a < b:
        assert elliptic_K(a) <= elliptic_K(b)
    if b - a > 1e-9:
        assert elliptic_K(a) < elliptic_K(b)
