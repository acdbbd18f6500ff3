import io
import json
import os
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "..", "symbolic", "tests", "samples")


def sample_path(name):
    return os.path.join(SAMPLES, f"{name}.hvf")


class TestNumericCommands(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, name, system, **options):
        stdout = io.StringIO()
        try:
            call_command(
                name,
                sample_path(system),
                out=self.out,
                no_progress_bar=True,
                stdout=stdout,
                **options,
            )
        finally:
            text = stdout.getvalue()
            self.document = json.loads(text) if text else None
        return self.document

    def test_distance_euclidean_plane(self):
        document = self.call(
            "distance",
            "euclid2",
            start="0,0",
            end="3,4",
            grid=4,
            restarts=2,
        )
        self.assertEqual(document["status"], "ok")
        self.assertAlmostEqual(document["distance"]["r_hat"], 4.0, delta=1e-3)
        self.assertEqual(document["hom_norm"], 7.0)
        self.assertNotIn("surrogate", document)
        self.assertTrue(os.path.isfile(document["controls_csv"]))

    def test_distance_grushin(self):
        document = self.call(
            "distance",
            "grushin1",
            start="0,0",
            end="1,0",
            grid=4,
            restarts=2,
        )
        self.assertAlmostEqual(document["surrogate"], 1.0)
        self.assertAlmostEqual(document["ratio_to_surrogate"], 1.0, delta=1e-3)

    def test_distance_wrong_dimension(self):
        with self.assertRaises(CommandError) as cm:
            self.call("distance", "grushin1", start="0,0,0", end="1,0")
        self.assertEqual(cm.exception.returncode, 1)
        self.assertEqual(self.document["reason"], "value_error")

    def test_gamma_unsupported_system(self):
        with self.assertRaises(CommandError) as cm:
            self.call("gamma", "chain3")
        self.assertEqual(cm.exception.returncode, 1)
        self.assertEqual(self.document["status"], "error")
        self.assertEqual(self.document["reason"], "unsupported_system_error")
        self.assertTrue(os.path.isfile(os.path.join(self.out, "gamma_report.json")))

    def test_gamma_grushin(self):
        document = self.call("gamma", "grushin1", grid=4, seed=3)
        self.assertEqual(document["status"], "ok")
        self.assertEqual(document["gamma0"], 1.0)
        self.assertLess(document["checks"]["symmetry_max_relative_error"], 1e-8)
        self.assertEqual(document["sample"]["count"], 4)
        self.assertEqual(document["config"]["seed"], 3)

    def test_verify_pole_suite(self):
        document = self.call("verify", "grushin1", suite="pole", seed=0)
        self.assertEqual(document["status"], "ok")
        self.assertEqual(len(document["reports"]), 2)
        self.assertTrue(all(r["status"] == "pass" for r in document["reports"]))

    def test_potential_defaults(self):
        document = self.call("potential", "grushin1")
        self.assertEqual(document["status"], "ok")
        table = document["table"]
        self.assertTrue(table["passed"])
        self.assertEqual(len(table["rows"]), 2 * 3 * 6)
        self.assertTrue(all(row["identity_ok"] for row in table["rows"]))
        self.assertTrue(all(m["nondecreasing"] for m in table["monotone"]))
        self.assertEqual(len(document["checks"]), 2)
        self.assertTrue(
            os.path.isfile(os.path.join(self.out, "potential_mean_values.csv")),
        )

    def test_verify_suites_at_default_seed(self):
        for suite in ("upper", "lower", "deriv", "kernel"):
            with self.subTest(suite=suite):
                document = self.call("verify", "grushin1", suite=suite, seed=0)
                self.assertEqual(document["status"], "ok")
                self.assertEqual(document["config"]["seed"], 0)
                for report in document["reports"]:
                    self.assertEqual(report["status"], "pass", report["gates"])

    def test_verify_needs_seed(self):
        with self.assertRaises(CommandError):
            call_command(
                "verify",
                sample_path("grushin1"),
                "--suite=pole",
                "--no-progress-bar",
                f"--out={self.out}",
                stdout=io.StringIO(),
            )
