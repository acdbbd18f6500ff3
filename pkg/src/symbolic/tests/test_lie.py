import logging
import os

from django.test import SimpleTestCase

from ..admissibility import check_admissible
from ..dsl import load_system
from ..dsl import parse_system
from ..lie import InvalidMultiIndexError
from ..lie import MultiIndex
from ..lie import hormander_rank
from ..lie import lie_basis
from ..lie import lie_bracket
from ..lie import nested_bracket
from ..lie import random_rational_points

SAMPLES = os.path.join(os.path.dirname(__file__), "samples")


def sample(name):
    return load_system(os.path.join(SAMPLES, f"{name}.hvf"))


class TestMultiIndex(SimpleTestCase):
    def test_weight(self):
        self.assertEqual(MultiIndex((1, 2, 2)).weight, 3)
        self.assertEqual(MultiIndex((1, 0)).weight, 3)
        self.assertEqual(str(MultiIndex((1, 2))), "(1,2)")

    def test_invalid(self):
        with self.assertRaises(InvalidMultiIndexError):
            MultiIndex(())
        with self.assertRaises(InvalidMultiIndexError):
            MultiIndex((1, -1))

    def test_out_of_range(self):
        with self.assertRaises(InvalidMultiIndexError):
            nested_bracket(sample("grushin1"), MultiIndex((1, 3)))
        with self.assertRaises(InvalidMultiIndexError):
            nested_bracket(sample("grushin1"), MultiIndex((0, 1)))


class TestBrackets(SimpleTestCase):
    def test_grushin_bracket(self):
        spec = sample("grushin1")
        bracket = nested_bracket(spec, MultiIndex((1, 2)))
        self.assertEqual(bracket.render(), "(0, 1)")
        self.assertTrue(nested_bracket(spec, MultiIndex((1, 2, 1))).is_zero())

    def test_antisymmetry(self):
        spec = sample("engel")
        x, y = spec.fields
        self.assertEqual(lie_bracket(x, y), -lie_bracket(y, x))

    def test_jacobi(self):
        spec = sample("chain3")
        x, y = spec.fields
        z = lie_bracket(x, y)
        total = (
            lie_bracket(x, lie_bracket(y, z))
            + lie_bracket(y, lie_bracket(z, x))
            + lie_bracket(z, lie_bracket(x, y))
        )
        self.assertTrue(total.is_zero())


class TestBasis(SimpleTestCase):
    def test_grushin_k(self):
        for k in (1, 2, 3):
            basis = lie_basis(sample(f"grushin{k}"))
            self.assertEqual(basis.N, k + 2)
            self.assertEqual(basis.q, k + 2)
            self.assertEqual(basis.step, k + 1)

    def test_chains(self):
        for name, n in (("chain3", 3), ("chain4", 4), ("powers4", 4)):
            spec = sample(name)
            basis = lie_basis(spec)
            self.assertEqual(spec.q, n * (n + 1) // 2)
            self.assertEqual(basis.N, n + 1)

    def test_grushin_weights_and_layers(self):
        basis = lie_basis(sample("grushin1"))
        self.assertEqual([i.to_list() for i in basis.indices], [[1], [2], [1, 2]])
        self.assertEqual(basis.weights, [1, 1, 2])
        self.assertEqual(len(basis.layer(1)), 2)
        self.assertEqual(basis.p, 1)

    def test_drift_basis(self):
        basis = lie_basis(sample("drift_grushin1"))
        self.assertIn(MultiIndex((0,)), basis.indices)
        self.assertEqual(basis.weights, [1, 2, 3])
        self.assertEqual(basis.N, 3)

    def test_rank(self):
        spec = sample("grushin1")
        basis = lie_basis(spec)
        self.assertEqual(hormander_rank(spec, basis, [0, 0]), 2)
        for point in random_rational_points(2, 5, seed=3):
            self.assertEqual(hormander_rank(spec, basis, point), 2)

    def test_random_points_are_seeded(self):
        self.assertEqual(
            random_rational_points(3, 4, seed=1),
            random_rational_points(3, 4, seed=1),
        )


class TestAdmissibility(SimpleTestCase):
    def test_admissible_samples(self):
        for name in ("grushin1", "grushin2", "chain3", "chain4", "engel", "powers4"):
            messages, basis = check_admissible(sample(name))
            self.assertFalse(messages.has_error(), messages.to_list())
            self.assertIsNotNone(basis)

    def test_euclidean_plane_warns(self):
        messages, basis = check_admissible(sample("euclid2"))
        self.assertFalse(messages.has_error())
        self.assertTrue(messages.has_warning())
        self.assertEqual(basis.N, 2)

    def test_drift_is_noted(self):
        messages, _ = check_admissible(sample("drift_grushin1"))
        self.assertFalse(messages.has_error())
        self.assertIn("info", [m["level"] for m in messages.to_list()])

    def test_inhomogeneous_system(self):
        spec = parse_system("dim = 2\nweights = [1, 2]\nX1 = (1, 0)\nX2 = (0, x1 + 1)\n")
        messages, basis = check_admissible(spec)
        self.assertTrue(messages.has_error())
        self.assertIsNone(basis)
        self.assertEqual(messages.failed_checks(), ["homogeneity"])

    def test_rank_deficient_system(self):
        spec = parse_system("dim = 2\nweights = [1, 2]\nX1 = (1, 0)\n")
        messages, _ = check_admissible(spec)
        self.assertTrue(messages.has_error())
        self.assertIn("rank", messages.failed_checks())
        self.assertEqual(
            {m["check"] for m in messages.to_list() if m["level"] == "error"},
            set(messages.failed_checks()),
        )

    def test_log_messages(self):
        messages, _ = check_admissible(sample("euclid2"))
        with self.assertLogs("hormander.admissibility", level="WARNING") as cm:
            messages.log_messages()
        self.assertTrue(any("[lift]" in line for line in cm.output))
        self.assertTrue(any("lift is trivial" in line for line in cm.output))

    def test_no_issues_logged(self):
        messages, _ = check_admissible(sample("grushin1"))
        with self.assertLogs("hormander.admissibility", level=logging.INFO) as cm:
            messages.log_messages()
        self.assertEqual(len(cm.output), 1)
        self.assertIn("no issues", cm.output[0])
