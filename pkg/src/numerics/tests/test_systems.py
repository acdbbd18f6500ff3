import os

from django.test import SimpleTestCase
from symbolic.dsl import load_system
from symbolic.dsl import parse_system

from ..systems import UnsupportedSystemError
from ..systems import is_grushin1
from ..systems import require_grushin1

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "..", "symbolic", "tests", "samples")


def sample(name):
    return load_system(os.path.join(SAMPLES, f"{name}.hvf"))


class TestSystems(SimpleTestCase):
    def test_grushin(self):
        self.assertTrue(is_grushin1(sample("grushin1")))
        self.assertTrue(is_grushin1(parse_system("dim=2; weights=[1,2]\nX1=(1,0)\nX2=(0,x1)")))

    def test_other_systems(self):
        for name in ("grushin2", "drift_grushin1", "euclid2", "chain3"):
            self.assertFalse(is_grushin1(sample(name)), name)
            with self.assertRaises(UnsupportedSystemError):
                require_grushin1(sample(name))
