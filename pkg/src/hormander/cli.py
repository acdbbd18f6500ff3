"""
The ``hormander`` entry point. Every subcommand is a management command of
one of the apps; this module only dispatches to it and turns argument
errors into exit code 3.
"""
import os
import sys
from typing import List
from typing import Optional

USAGE = (
    "usage: hormander {analyze,lift,distance,gamma,verify,potential} "
    "system.hvf [options]"
)

SUBCOMMANDS = {
    "analyze": "symbolic",
    "lift": "symbolic",
    "distance": "numerics",
    "gamma": "numerics",
    "verify": "numerics",
    "potential": "numerics",
}


def _error(command: str, code: int, reason: str, message: str) -> int:
    from .output import dumps
    from .output import error_report

    document = error_report(command, code, reason, message=message)
    sys.stdout.write(dumps(document) + "\n")
    return code


def _usage_error(command: str, message: str) -> int:
    from .commands import USAGE_ERROR

    _error(command, USAGE_ERROR, "usage_error", message)
    sys.stderr.write(USAGE + "\n")
    return USAGE_ERROR


def run(argv: Optional[List[str]] = None) -> int:
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "hormander.settings")
    import django

    django.setup()

    from django.core.management import load_command_class
    from django.core.management.base import CommandError

    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        return _usage_error("hormander", "No subcommand given")
    name, rest = argv[0], argv[1:]
    if name in ("-h", "--help"):
        sys.stdout.write(USAGE + "\n")
        return 0
    if name not in SUBCOMMANDS:
        return _usage_error("hormander", f"Unknown subcommand {name!r}")

    command = load_command_class(SUBCOMMANDS[name], name)
    parser = command.create_parser("hormander", name)
    try:
        options = parser.parse_args(rest)
    except CommandError as e:
        return _usage_error(name, str(e))
    except SystemExit as e:
        # --help
        return e.code or 0

    cmd_options = vars(options)
    args = cmd_options.pop("args", ())
    try:
        command.execute(*args, **cmd_options)
    except CommandError as e:
        return e.returncode
    except Exception as e:
        # raised before the command could write its own report
        from .commands import NUMERIC_FAILURE
        from .commands import reason_for
        from .commands import returncode_for

        code = returncode_for(e) or NUMERIC_FAILURE
        return _error(name, code, reason_for(e), str(e))
    return 0


def main():
    sys.exit(run())
