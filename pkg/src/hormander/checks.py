import os
import stat

from django.conf import settings
from django.core.checks import Error
from django.core.checks import register
from django.core.checks import Warning

exists_message = "{} is set but doesn't exist."
exists_hint = "Create a directory at {}"
writeable_message = "{} is not writeable"
writeable_hint = (
    "Set the permissions of {} to be writeable by the user running the "
    "hormander commands"
)


def path_check(var, directory):
    messages = []
    if directory:
        if not os.path.isdir(directory):
            messages.append(
                Error(exists_message.format(var), exists_hint.format(directory)),
            )
        else:
            test_file = os.path.join(
                directory,
                f"__hormander_write_test_{os.getpid()}__",
            )
            try:
                with open(test_file, "w"):
                    pass
            except PermissionError:
                messages.append(
                    Error(
                        writeable_message.format(var),
                        writeable_hint.format(
                            f"\n{stat.filemode(os.stat(directory).st_mode)} "
                            f"{directory}\n",
                        ),
                    ),
                )
            finally:
                if os.path.isfile(test_file):
                    os.remove(test_file)

    return messages


@register()
def paths_check(app_configs, **kwargs):
    """
    Check the data, logging and output directories for existence and
    writeability
    """

    return (
        path_check("HORMANDER_DATA_DIR", settings.DATA_DIR)
        + path_check("HORMANDER_LOGGING_DIR", settings.LOGGING_DIR)
        + path_check("HORMANDER_OUTPUT_DIR", settings.OUTPUT_DIR)
    )


@register()
def numerics_check(app_configs, **kwargs):
    """
    Reject numeric settings no run could succeed with.
    """

    messages = []
    if settings.THREADS < 1:
        messages.append(
            Error(
                f"HORMANDER_THREADS must be positive, got {settings.THREADS}.",
            ),
        )
    for name in ("QUAD_REL_TOL", "QUAD_ABS_TOL"):
        value = getattr(settings, name)
        if not 0 < value < 1:
            messages.append(
                Error(
                    f"HORMANDER_{name} must lie in (0, 1), got {value}.",
                    "Tolerances are relative or absolute errors, e.g. 1e-8.",
                ),
            )
    if settings.QUAD_LIMIT < 1 or settings.QUAD_MAX_LEVELS < 1:
        messages.append(
            Error(
                "HORMANDER_QUAD_LIMIT and HORMANDER_QUAD_MAX_LEVELS must be positive.",
            ),
        )
    if settings.ALPHA <= 2:
        messages.append(
            Warning(
                f"HORMANDER_ALPHA={settings.ALPHA} does not exceed 2; the solid "
                f"mean-value kernel is not integrable for the Grushin plane.",
            ),
        )
    if settings.CONTOUR_MESH < 16:
        messages.append(
            Warning(
                f"HORMANDER_CONTOUR_MESH={settings.CONTOUR_MESH} is too coarse to "
                f"resolve level sets reliably.",
            ),
        )
    return messages


@register()
def debug_mode_check(app_configs, **kwargs):
    if settings.DEBUG:
        return [
            Warning(
                "DEBUG mode is enabled. Every intermediate polynomial and "
                "quadrature refinement is logged, which slows runs down "
                "considerably.",
            ),
        ]
    else:
        return []
