import io
import json
import os
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

SAMPLES = os.path.join(os.path.dirname(__file__), "samples")


class TestManagementCommands(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, name, path, **options):
        stdout = io.StringIO()
        try:
            call_command(
                name,
                path,
                out=self.out,
                no_progress_bar=True,
                stdout=stdout,
                **options,
            )
        finally:
            self.document = json.loads(stdout.getvalue())
        return self.document

    def write_system(self, text):
        path = os.path.join(self.out, "system.hvf")
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_analyze_every_sample(self):
        for name in sorted(os.listdir(SAMPLES)):
            document = self.call("analyze", os.path.join(SAMPLES, name))
            self.assertEqual(document["status"], "ok", name)
            self.assertEqual(document["rank_at_origin"], document["system"]["n"], name)

    def test_analyze_grushin(self):
        document = self.call("analyze", os.path.join(SAMPLES, "grushin1.hvf"), volume=True)
        self.assertEqual(document["q"], 3)
        self.assertEqual(document["basis"]["elements"][2]["field"], "(0, 1)")
        self.assertEqual(document["volume"]["doubling_at_origin"], "8")
        self.assertTrue(os.path.isfile(document["volume_csv"]))
        self.assertEqual(document["config"]["seed"], 0)

    def test_analyze_inhomogeneous(self):
        path = self.write_system("dim = 2\nweights = [1, 2]\nX1 = (1, 0)\nX2 = (0, x1 + 1)\n")
        with self.assertRaises(CommandError) as cm:
            self.call("analyze", path)
        self.assertEqual(cm.exception.returncode, 1)
        self.assertEqual(self.document["status"], "fail")
        self.assertEqual(self.document["reason"], "verification_failed")
        self.assertFalse(self.document["admissibility"]["admissible"])

    def test_syntax_error(self):
        path = self.write_system("dim = 2\nweights = [1, 2]\nfield X1 = (1, 0")
        with self.assertRaises(CommandError) as cm:
            self.call("analyze", path)
        self.assertEqual(cm.exception.returncode, 1)
        self.assertEqual(self.document["reason"], "system_syntax_error")
        self.assertEqual(self.document["line"], 3)
        self.assertTrue(os.path.isfile(os.path.join(self.out, "analyze_report.json")))

    def test_lift(self):
        document = self.call("lift", os.path.join(SAMPLES, "grushin1.hvf"))
        self.assertEqual(document["lift"]["N"], 3)
        self.assertEqual(document["lift"]["group_law"]["x2"], "x1*eta1 + x2 + y2")
        self.assertTrue(all(document["checks"].values()))
        self.assertIn("eta1", document["group_law_text"])

    def test_lift_step_too_large(self):
        path = self.write_system("dim = 2\nweights = [1, 7]\nX1 = (1, 0)\nX2 = (0, x1^6)\n")
        with self.assertRaises(CommandError) as cm:
            self.call("lift", path)
        self.assertEqual(cm.exception.returncode, 1)
        self.assertEqual(self.document["reason"], "unsupported_step_error")
