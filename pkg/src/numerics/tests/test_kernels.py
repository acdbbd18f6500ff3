from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from symbolic.dsl import VectorField
from symbolic.poly import Context
from symbolic.poly import Polynomial

from ..kernels import RadicalExpression


class TestRadicalExpression(SimpleTestCase):
    def setUp(self):
        self.context = Context.base([1, 1, 1])
        self.variables = self.context.variables()
        self.radius = sum((v * v for v in self.variables), Polynomial.zero(self.context))
        one = Polynomial.constant(self.context, 1)
        zero = Polynomial.zero(self.context)
        self.partials = [
            VectorField(tuple(one if i == j else zero for j in range(3))) for i in range(3)
        ]

    def test_chain_rule(self):
        kernel = RadicalExpression.power(self.radius, Fraction(-1, 2))
        derivative = kernel.apply(self.partials[0])
        self.assertEqual(derivative.terms, ((-self.variables[0], Fraction(-3, 2)),))

    def test_newton_kernel_is_harmonic(self):
        kernel = RadicalExpression.power(self.radius, Fraction(-1, 2))
        total = None
        for d in self.partials:
            term = kernel.apply(d).apply(d)
            total = term if total is None else total + term
        self.assertTrue(total.is_zero())
        self.assertFalse(kernel.apply(self.partials[1]).is_zero())

    def test_numerator(self):
        kernel = RadicalExpression.power(self.radius, Fraction(-1, 2))
        second = kernel.apply(self.partials[0]).apply(self.partials[0])
        numerator, lowest = second.numerator()
        x1, x2, x3 = self.variables
        self.assertEqual(lowest, Fraction(-5, 2))
        self.assertEqual(numerator, 2 * x1 * x1 - x2 * x2 - x3 * x3)

    def test_compile(self):
        kernel = RadicalExpression.power(self.radius, Fraction(-1, 2))
        points = np.array([[1.0, 2.0, 2.0], [0.0, 0.0, 0.5]])
        np.testing.assert_allclose(kernel.compile()(points), [1 / 3, 2.0])
        derivative = kernel.apply(self.partials[2]).compile()
        np.testing.assert_allclose(derivative(points), [-2 / 27, -4.0])

    def test_mismatched_radicands(self):
        a = RadicalExpression.power(self.radius, Fraction(1, 2))
        b = RadicalExpression.power(self.radius + 1, Fraction(1, 2))
        with self.assertRaises(ValueError):
            a + b
