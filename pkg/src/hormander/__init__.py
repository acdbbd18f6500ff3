from .checks import numerics_check
from .checks import paths_check

__all__ = ["numerics_check", "paths_check"]
