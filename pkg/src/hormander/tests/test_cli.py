import io
import json
import os
from contextlib import redirect_stderr
from contextlib import redirect_stdout

from django.test import SimpleTestCase

from ..cli import run
from ..commands import USAGE_ERROR
from .utils import DirectoriesMixin
from .utils import sample_path


class TestCli(DirectoriesMixin, SimpleTestCase):
    def call(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = run(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    def test_no_arguments(self):
        code, stdout, stderr = self.call()
        self.assertEqual(code, USAGE_ERROR)
        self.assertEqual(json.loads(stdout)["reason"], "usage_error")
        self.assertIn("usage:", stderr)

    def test_help(self):
        code, stdout, _ = self.call("--help")
        self.assertEqual(code, 0)
        self.assertIn("analyze", stdout)

    def test_unknown_subcommand(self):
        code, stdout, _ = self.call("integrate", sample_path("grushin1"))
        self.assertEqual(code, USAGE_ERROR)
        self.assertIn("integrate", json.loads(stdout)["message"])

    def test_seed_is_required_for_verify(self):
        code, stdout, _ = self.call("verify", sample_path("grushin1"), "--suite", "upper")
        self.assertEqual(code, USAGE_ERROR)
        self.assertIn("--seed", json.loads(stdout)["message"])

    def test_bad_flag_value(self):
        code, _, _ = self.call("analyze", sample_path("grushin1"), "--grid", "many")
        self.assertEqual(code, USAGE_ERROR)

    def test_analyze(self):
        out = os.path.join(self.dirs.output_dir, "cli")
        code, stdout, _ = self.call(
            "analyze",
            sample_path("grushin1"),
            "--out",
            out,
            "--no-progress-bar",
        )
        self.assertEqual(code, 0)
        document = json.loads(stdout)
        self.assertEqual(document["status"], "ok")
        self.assertEqual(document["q"], 3)
        self.assertEqual(document["N"], 3)
        self.assertTrue(os.path.isfile(os.path.join(out, "analyze_report.json")))

    def test_missing_file(self):
        code, stdout, _ = self.call(
            "analyze",
            os.path.join(self.dirs.data_dir, "missing.hvf"),
            "--no-progress-bar",
        )
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(stdout)["reason"], "file_not_found_error")

    def test_default_output_directory(self):
        code, _, _ = self.call("lift", sample_path("grushin1"), "--no-progress-bar")
        self.assertEqual(code, 0)
        self.assertTrue(
            os.path.isfile(os.path.join(self.dirs.output_dir, "lift", "lift_report.json")),
        )

    def test_output_directory_is_a_file(self):
        out = os.path.join(self.dirs.data_dir, "taken")
        with open(out, "w") as f:
            f.write("not a directory")
        code, stdout, _ = self.call(
            "analyze",
            sample_path("grushin1"),
            "--out",
            out,
            "--no-progress-bar",
        )
        self.assertEqual(code, 1)
        document = json.loads(stdout)
        self.assertEqual(document["status"], "error")
        self.assertEqual(document["reason"], "file_exists_error")
