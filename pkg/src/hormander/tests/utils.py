import os
import shutil
import tempfile
from collections import namedtuple
from contextlib import contextmanager

from django.conf import settings
from django.test import override_settings


def sample_path(name):
    return os.path.join(settings.SAMPLES_DIR, f"{name}.hvf")


def setup_directories():

    dirs = namedtuple("Dirs", ())

    dirs.data_dir = tempfile.mkdtemp()
    dirs.logging_dir = os.path.join(dirs.data_dir, "log")
    dirs.output_dir = os.path.join(dirs.data_dir, "runs")

    os.makedirs(dirs.logging_dir, exist_ok=True)
    os.makedirs(dirs.output_dir, exist_ok=True)

    dirs.settings_override = override_settings(
        DATA_DIR=dirs.data_dir,
        LOGGING_DIR=dirs.logging_dir,
        OUTPUT_DIR=dirs.output_dir,
    )
    dirs.settings_override.enable()

    return dirs


def remove_dirs(dirs):
    shutil.rmtree(dirs.data_dir, ignore_errors=True)
    dirs.settings_override.disable()


@contextmanager
def hormander_environment():
    dirs = None
    try:
        dirs = setup_directories()
        yield dirs
    finally:
        if dirs:
            remove_dirs(dirs)


class DirectoriesMixin:
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.dirs = None

    def setUp(self) -> None:
        self.dirs = setup_directories()
        super().setUp()

    def tearDown(self) -> None:
        super().tearDown()
        remove_dirs(self.dirs)
