import os
from fractions import Fraction

from django.test import SimpleTestCase

from ..bch import UnsupportedStepError
from ..dsl import load_system
from ..dsl import parse_system
from ..lie import lie_basis
from ..lifting import build_lift
from ..lifting import folland_projection
from ..lifting import structure_constants
from ..poly import Polynomial

SAMPLES = os.path.join(os.path.dirname(__file__), "samples")


def sample(name):
    return load_system(os.path.join(SAMPLES, f"{name}.hvf"))


class TestAlgebra(SimpleTestCase):
    def test_structure_constants(self):
        for name in ("grushin1", "chain4", "engel"):
            algebra = structure_constants(lie_basis(sample(name)))
            self.assertTrue(algebra.is_antisymmetric(), name)
            self.assertTrue(algebra.satisfies_jacobi(), name)

    def test_grushin_projection(self):
        algebra = structure_constants(lie_basis(sample("grushin1")))
        self.assertEqual(algebra.bracket(algebra.unit(0), algebra.unit(1)), (0, 0, 1))
        self.assertEqual(
            folland_projection(algebra, [Fraction(1), Fraction(2), Fraction(3)]),
            (1, 4),
        )


class TestGrushinLift(SimpleTestCase):
    def setUp(self):
        self.lift = build_lift(sample("grushin1"))

    def test_dimensions(self):
        self.assertEqual(self.lift.N, 3)
        self.assertEqual(self.lift.p, 1)
        self.assertEqual(self.lift.Q, 4)
        self.assertEqual(self.lift.context.names, ("x1", "x2", "xi1"))

    def test_heisenberg_law(self):
        v = {
            name: Polynomial.variable(self.lift.pair_context, name)
            for name in self.lift.pair_context.names
        }
        self.assertEqual(
            list(self.lift.law),
            [
                v["x1"] + v["y1"],
                v["x2"] + v["y2"] + v["x1"] * v["eta1"],
                v["xi1"] + v["eta1"],
            ],
        )

    def test_lifted_fields(self):
        x1 = Polynomial.variable(self.lift.context, "x1")
        one = Polynomial.constant(self.lift.context, 1)
        zero = Polynomial.zero(self.lift.context)
        self.assertEqual(list(self.lift.fields[0].coeffs), [one, zero, zero])
        self.assertEqual(list(self.lift.fields[1].coeffs), [zero, x1, one])

    def test_group_operations(self):
        z = (Fraction(1), Fraction(2), Fraction(-1))
        w = (Fraction(3), Fraction(1, 2), Fraction(5))
        self.assertEqual(self.lift.multiply(z, w), (4, Fraction(15, 2), 4))
        self.assertEqual(self.lift.multiply(z, self.lift.invert(z)), (0, 0, 0))
        self.assertEqual(self.lift.dilate(z, 2), (2, 8, -2))

    def test_to_dict(self):
        document = self.lift.to_dict()
        self.assertEqual(document["right_coordinates"], ["y1", "y2", "eta1"])
        self.assertEqual(document["lifted_fields"]["X2"], {"x2": "x1", "xi1": "1"})


class TestLiftChecks(SimpleTestCase):
    def test_samples_verify(self):
        for name in ("grushin1", "grushin2", "chain3", "engel", "drift_grushin1"):
            checks = build_lift(sample(name)).verify()
            self.assertTrue(all(checks.values()), f"{name}: {checks}")

    def test_free_dimensions(self):
        for name, N, p in (("grushin2", 4, 2), ("chain3", 4, 1), ("powers4", 5, 1)):
            lift = build_lift(sample(name))
            self.assertEqual(lift.N, N, name)
            self.assertEqual(lift.p, p, name)

    def test_euclidean_lift_is_trivial(self):
        lift = build_lift(sample("euclid2"))
        self.assertEqual(lift.p, 0)
        self.assertEqual(lift.multiply((1, 2), (3, 4)), (4, 6))
        self.assertTrue(all(lift.verify().values()))

    def test_drift_is_lifted(self):
        lift = build_lift(sample("drift_grushin1"))
        self.assertIsNotNone(lift.drift)
        self.assertIn("X0", lift.to_dict()["lifted_fields"])

    def test_step_too_large(self):
        spec = parse_system("dim = 2\nweights = [1, 7]\nX1 = (1, 0)\nX2 = (0, x1^6)\n")
        with self.assertRaises(UnsupportedStepError):
            build_lift(spec)
