from fractions import Fraction

import sympy
from django.test import SimpleTestCase

from ..bch import UnsupportedStepError
from ..bch import bch_series
from ..bch import dynkin_table


def _exp(a):
    size = a.shape[0]
    result = sympy.eye(size)
    term = sympy.eye(size)
    for k in range(1, size):
        term = term * a / k
        result = result + term
    return result


def _scale(c, a):
    return a * sympy.Rational(c.numerator, c.denominator)


def _commutator(a, b):
    return a * b - b * a


class TestBCH(SimpleTestCase):
    def test_first_terms(self):
        table = dynkin_table(1)
        self.assertEqual(table, {"x": Fraction(1), "y": Fraction(1)})

    def test_second_order_bracket(self):
        table = dynkin_table(2)
        # [x, y] and [y, x] together carry the coefficient 1/2 of [x, y]
        self.assertEqual(table.get("xy", 0) - table.get("yx", 0), Fraction(1, 2))

    def test_nilpotent_matrices(self):
        x = sympy.Matrix(
            [[0, 1, 2, 0], [0, 0, 3, -1], [0, 0, 0, 5], [0, 0, 0, 0]],
        )
        y = sympy.Matrix(
            [[0, -2, 0, 1], [0, 0, 1, 4], [0, 0, 0, 2], [0, 0, 0, 0]],
        )
        z = bch_series(x, y, _commutator, 3, scale=_scale)
        self.assertEqual(_exp(z), _exp(x) * _exp(y))

    def test_commuting_arguments(self):
        x = sympy.Matrix([[0, 1, 0], [0, 0, 0], [0, 0, 0]])
        z = bch_series(x, 2 * x, _commutator, 2, scale=_scale)
        self.assertEqual(z, 3 * x)

    def test_unsupported_step(self):
        with self.assertRaises(UnsupportedStepError):
            dynkin_table(7)
        with self.assertRaises(UnsupportedStepError):
            bch_series(1, 2, _commutator, 0)
