import math
import multiprocessing
import os
from typing import Final

from concurrent_log_handler.queue import setup_logging_queues
from dotenv import load_dotenv

# Tap hormander.conf if it's available
if os.path.exists("../hormander.conf"):
    load_dotenv("../hormander.conf")
elif os.path.exists("/etc/hormander.conf"):
    load_dotenv("/etc/hormander.conf")
elif os.path.exists("/usr/local/etc/hormander.conf"):
    load_dotenv("/usr/local/etc/hormander.conf")

# One BLAS thread per joblib worker
os.environ.setdefault("OMP_NUM_THREADS", "1")


def __get_boolean(key: str, default: str = "NO") -> bool:
    """
    Return a boolean value based on whatever the user has supplied in the
    environment based on whether the value "looks like" it's True or not.
    """
    return bool(os.getenv(key, default).lower() in ("yes", "y", "1", "t", "true"))


def __get_int(key: str, default: int) -> int:
    """
    Return an integer value based on the environment variable or a default
    """
    return int(os.getenv(key, default))


def __get_float(key: str, default: float) -> float:
    """
    Return a float value based on the environment variable or a default
    """
    return float(os.getenv(key, default))


DEBUG = __get_boolean("HORMANDER_DEBUG", "NO")

SECRET_KEY = os.getenv("HORMANDER_SECRET_KEY", "hormander-has-no-sessions")


###############################################################################
# Directories                                                                 #
###############################################################################

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

DATA_DIR = os.getenv("HORMANDER_DATA_DIR", os.path.join(BASE_DIR, "..", "data"))

LOGGING_DIR = os.getenv("HORMANDER_LOGGING_DIR", os.path.join(DATA_DIR, "log"))

OUTPUT_DIR = os.getenv("HORMANDER_OUTPUT_DIR", os.path.join(DATA_DIR, "runs"))

# Shipped systems
SAMPLES_DIR = os.path.join(BASE_DIR, "symbolic", "tests", "samples")

###############################################################################
# Application Definition                                                      #
###############################################################################

INSTALLED_APPS = [
    "hormander",
    "symbolic.apps.SymbolicConfig",
    "numerics.apps.NumericsConfig",
]

# Nothing is persisted in a database; runs write JSON and CSV artifacts.
DATABASES = {}

USE_TZ = True

###############################################################################
# Numerics                                                                    #
###############################################################################


def default_threads() -> int:
    # always leave one core open
    available_cores = max(multiprocessing.cpu_count(), 1)
    try:
        if available_cores < 4:
            return available_cores
        return max(available_cores - 1, 1)
    except NotImplementedError:
        return 1


THREADS: Final[int] = __get_int("HORMANDER_THREADS", default_threads())

SEED: Final[int] = __get_int("HORMANDER_SEED", 0)

QUAD_REL_TOL: Final[float] = __get_float("HORMANDER_QUAD_REL_TOL", 1e-8)
QUAD_ABS_TOL: Final[float] = __get_float("HORMANDER_QUAD_ABS_TOL", 1e-12)
QUAD_LIMIT: Final[int] = __get_int("HORMANDER_QUAD_LIMIT", 200)
QUAD_MAX_LEVELS: Final[int] = __get_int("HORMANDER_QUAD_MAX_LEVELS", 7)

CONTOUR_MESH: Final[int] = __get_int("HORMANDER_CONTOUR_MESH", 160)

ALPHA: Final[float] = __get_float("HORMANDER_ALPHA", 3.0)

DISTANCE_SEGMENTS: Final[int] = __get_int("HORMANDER_DISTANCE_SEGMENTS", 16)
DISTANCE_RESTARTS: Final[int] = __get_int("HORMANDER_DISTANCE_RESTARTS", 8)
DISTANCE_BUDGET: Final[int] = __get_int("HORMANDER_DISTANCE_BUDGET", 4000)

###############################################################################
# Logging                                                                     #
###############################################################################

setup_logging_queues()

os.makedirs(LOGGING_DIR, exist_ok=True)
os.makedirs(OUTPUT_DIR, exist_ok=True)

LOGROTATE_MAX_SIZE = os.getenv("HORMANDER_LOGROTATE_MAX_SIZE", 1024 * 1024)
LOGROTATE_MAX_BACKUPS = os.getenv("HORMANDER_LOGROTATE_MAX_BACKUPS", 20)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "filters": {
        "run_id": {"()": "hormander.loggers.RunIdFilter"},
    },
    "formatters": {
        "verbose": {
            "format": "[{asctime}] [{levelname}] [{name}] [{run}] {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG" if DEBUG else "WARNING",
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
        "file_hormander": {
            "class": "concurrent_log_handler.ConcurrentRotatingFileHandler",
            "formatter": "verbose",
            "filters": ["run_id"],
            "filename": os.path.join(LOGGING_DIR, "hormander.log"),
            "maxBytes": LOGROTATE_MAX_SIZE,
            "backupCount": LOGROTATE_MAX_BACKUPS,
        },
    },
    "root": {"handlers": ["console"]},
    "loggers": {
        "hormander": {"handlers": ["file_hormander"], "level": "DEBUG"},
    },
}
