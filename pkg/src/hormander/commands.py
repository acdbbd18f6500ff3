"""
Shared plumbing of the run commands: argument parsing, the per-run
configuration, exit codes and the JSON/CSV artifacts of every run.
"""
import argparse
import logging
import os
import re
from dataclasses import asdict
from dataclasses import dataclass
from typing import Optional
from typing import Tuple

from django.conf import settings
from django.core.management.base import BaseCommand
from django.core.management.base import CommandError
from numerics.contour import DegenerateLevelError
from numerics.contour import OpenContourError
from numerics.distance import InfeasiblePathError
from numerics.gamma import CalibrationError
from numerics.gamma import PoleError
from numerics.quadrature import QuadratureError
from numerics.quadrature import QuadratureSpec
from numerics.systems import UnsupportedSystemError
from symbolic.bch import UnsupportedStepError
from symbolic.dsl import load_system
from symbolic.dsl import SystemSpecError
from symbolic.dsl import SystemSyntaxError
from symbolic.lie import HomogeneityViolationError
from symbolic.lie import InvalidMultiIndexError
from symbolic.lifting import LiftInconsistencyError
from symbolic.lifting import NonClosedBasisError
from symbolic.poly import PolynomialContextError

from .output import ArtifactWriter
from .output import dumps
from .output import error_report
from .output import report

logger = logging.getLogger("hormander.commands")

VALIDATION_FAILURE = 1
NUMERIC_FAILURE = 2
USAGE_ERROR = 3

NUMERIC_ERRORS = (
    QuadratureError,
    CalibrationError,
    InfeasiblePathError,
    OpenContourError,
    DegenerateLevelError,
    PoleError,
)

VALIDATION_ERRORS = (
    SystemSyntaxError,
    SystemSpecError,
    HomogeneityViolationError,
    InvalidMultiIndexError,
    UnsupportedSystemError,
    UnsupportedStepError,
    LiftInconsistencyError,
    NonClosedBasisError,
    PolynomialContextError,
    OSError,
    ValueError,
)


def returncode_for(exc: Exception) -> Optional[int]:
    # PoleError is a ValueError, so numeric failures are matched first
    if isinstance(exc, NUMERIC_ERRORS):
        return NUMERIC_FAILURE
    if isinstance(exc, VALIDATION_ERRORS):
        return VALIDATION_FAILURE
    return None


def parse_floats(text: str) -> Tuple[float, ...]:
    """Parses "1,0" into (1.0, 0.0); write --from=-1,0 for negative entries."""
    try:
        return tuple(float(v) for v in text.replace(" ", "").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma separated list")


def reason_for(exc: Exception) -> str:
    """SystemSyntaxError -> system_syntax_error"""
    return re.sub(r"(?<!^)(?=[A-Z])", "_", type(exc).__name__).lower()


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    system: str
    tol: Optional[float] = None
    grid: Optional[int] = None
    seed: int = 0
    out: Optional[str] = None
    progress: bool = True
    threads: int = 1

    def quadrature(self, **overrides) -> QuadratureSpec:
        return QuadratureSpec.from_settings(rel_tol=self.tol, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)


class RunCommand(BaseCommand):
    """
    Base of the subcommands. Subclasses set ``subcommand``, add their own
    flags in ``add_run_arguments`` and return the report payload from
    ``run``. A payload with ``"failed": True`` ends the run with status
    "fail" and exit code 1.
    """

    subcommand = None

    seed_required = False

    def add_arguments(self, parser):
        parser.add_argument("system", help="Path of a .hvf system file")
        parser.add_argument(
            "--tol",
            type=float,
            default=None,
            help="Relative tolerance of the quadratures "
            "(default: HORMANDER_QUAD_REL_TOL)",
        )
        parser.add_argument(
            "--grid",
            type=int,
            default=None,
            help="Size of the sample grid; its meaning depends on the subcommand",
        )
        parser.add_argument(
            "--seed",
            type=int,
            default=None,
            required=self.seed_required,
            help="Seed of every random draw of the run (default: HORMANDER_SEED)",
        )
        parser.add_argument(
            "--out",
            default=None,
            help="Directory receiving the JSON and CSV artifacts "
            "(default: HORMANDER_OUTPUT_DIR/<subcommand>)",
        )
        parser.add_argument(
            "--no-progress-bar",
            default=False,
            action="store_true",
            help="If set, the progress bar will not be shown",
        )
        self.add_run_arguments(parser)

    def add_run_arguments(self, parser):
        pass

    def config_from(self, options) -> RunConfig:
        out = options["out"] or os.path.join(settings.OUTPUT_DIR, self.subcommand)
        seed = options["seed"]
        return RunConfig(
            subcommand=self.subcommand,
            system=options["system"],
            tol=options["tol"],
            grid=options["grid"],
            seed=settings.SEED if seed is None else seed,
            out=out,
            progress=not options["no_progress_bar"],
            threads=settings.THREADS,
        )

    def run(self, spec, config: RunConfig, writer: ArtifactWriter, options) -> dict:
        raise NotImplementedError

    def fail(self, exc: Exception, config: RunConfig, writer: ArtifactWriter):
        """Writes the error report of ``exc`` and ends the run."""
        code = returncode_for(exc)
        details = {"message": str(exc), "system": config.system}
        if code is None:
            code = NUMERIC_FAILURE
            details["unexpected"] = True
            logger.exception(f"{self.subcommand} stopped on an unexpected error")
        if isinstance(exc, SystemSyntaxError):
            details.update(line=exc.line, column=exc.column)
        if isinstance(exc, QuadratureError):
            details["estimate"] = exc.estimate
        document = error_report(self.subcommand, code, reason_for(exc), **details)
        writer.write_json("report", document)
        self.stdout.write(dumps(document))
        logger.warning(f"{self.subcommand} failed with exit code {code}: {exc}")
        raise CommandError(str(exc), returncode=code)

    def handle(self, *args, **options):
        config = self.config_from(options)
        writer = ArtifactWriter(config.out, self.subcommand)
        logger.info(f"Running {self.subcommand} on {config.system}")

        try:
            spec = load_system(config.system)
            payload = self.run(spec, config, writer, options)
            failed = payload.pop("failed", False)
            payload["config"] = config.to_dict()
            if failed:
                payload.update(
                    exit_code=VALIDATION_FAILURE,
                    reason="verification_failed",
                )
            document = report(
                self.subcommand,
                payload,
                status="fail" if failed else "ok",
            )
        except CommandError:
            raise
        except Exception as e:
            self.fail(e, config, writer)

        writer.write_json("report", document)
        self.stdout.write(dumps(document))
        logger.info(f"{self.subcommand} wrote {len(writer.written)} artifact(s)")
        if failed:
            raise CommandError(
                f"{self.subcommand} finished with failed checks",
                returncode=VALIDATION_FAILURE,
            )
