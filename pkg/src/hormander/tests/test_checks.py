import os

from django.test import override_settings
from django.test import SimpleTestCase

from ..checks import debug_mode_check
from ..checks import numerics_check
from ..checks import paths_check
from .utils import DirectoriesMixin


class TestChecks(DirectoriesMixin, SimpleTestCase):
    def test_paths_check(self):
        self.assertEqual(paths_check(None), [])

    @override_settings(
        DATA_DIR="/tmp/hormander-does-not-exist",
        LOGGING_DIR="/tmp/hormander-does-not-exist/log",
    )
    def test_paths_check_dont_exist(self):
        msgs = paths_check(None)
        self.assertEqual(len(msgs), 2, str(msgs))

        for msg in msgs:
            self.assertTrue(msg.msg.endswith("is set but doesn't exist."))

    def test_paths_check_no_access(self):
        if os.geteuid() == 0:
            self.skipTest("root can write anywhere")
        os.chmod(self.dirs.output_dir, 0o000)
        try:
            msgs = paths_check(None)
        finally:
            os.chmod(self.dirs.output_dir, 0o777)
        self.assertEqual(len(msgs), 1)
        self.assertTrue(msgs[0].msg.endswith("is not writeable"))

    def test_numerics_check_defaults(self):
        self.assertEqual(numerics_check(None), [])

    @override_settings(THREADS=0, QUAD_REL_TOL=2.0)
    def test_numerics_check_errors(self):
        msgs = numerics_check(None)
        self.assertEqual(len(msgs), 2)
        self.assertIn("HORMANDER_THREADS", msgs[0].msg)
        self.assertIn("HORMANDER_QUAD_REL_TOL", msgs[1].msg)

    @override_settings(ALPHA=2.0, CONTOUR_MESH=8)
    def test_numerics_check_warnings(self):
        msgs = numerics_check(None)
        self.assertEqual(len(msgs), 2)
        self.assertTrue(all(m.level == 30 for m in msgs))

    @override_settings(DEBUG=False)
    def test_debug_disabled(self):
        self.assertEqual(debug_mode_check(None), [])

    @override_settings(DEBUG=True)
    def test_debug_enabled(self):
        self.assertEqual(len(debug_mode_check(None)), 1)
