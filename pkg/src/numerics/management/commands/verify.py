from hormander.commands import RunCommand
from hormander.commands import parse_floats

from ...estimates import SUITES
from ...estimates import EstimatesVerifier
from ...gamma import calibrate_gamma0
from ...sampling import PairGrid

DEFAULT_POLES = ((1.0, 0.0), (0.0, 0.0))


class Command(RunCommand):

    help = """
        Runs one suite of empirical checks of the estimates for the Grushin
        fundamental solution and reports the fitted constants and gates:
        upper and lower two-sided bounds, fixed-pole behaviour, derivative
        bounds or the cancellation of the singular kernel. --grid sets the
        number of sampled pairs. A suite whose gates fail exits with 1.
    """.replace(
        "    ",
        "",
    )

    subcommand = "verify"

    seed_required = True

    def add_run_arguments(self, parser):
        parser.add_argument(
            "--suite",
            choices=SUITES,
            required=True,
            help="Which estimates to check",
        )
        parser.add_argument(
            "--pole",
            type=parse_floats,
            default=None,
            help="Pole of the pole and kernel suites "
            "(default: 1,0 and 0,0 for pole, 1,0 for kernel)",
        )
        parser.add_argument(
            "--order",
            type=int,
            choices=(1, 2, 3),
            default=1,
            help="Derivative order of the deriv suite",
        )
        parser.add_argument(
            "--calibrate",
            default=False,
            action="store_true",
            help="If set, γ₀ is calibrated instead of taken as 1",
        )

    def run(self, spec, config, writer, options):
        verifier = EstimatesVerifier.for_system(
            spec,
            n_jobs=config.threads,
            progress=config.progress,
        )
        payload = {}
        if options["calibrate"]:
            calibration = calibrate_gamma0(verifier.gamma, config.quadrature())
            verifier.gamma = verifier.gamma.with_gamma0(calibration.gamma0)
            payload["calibration"] = calibration.to_dict()

        suite = options["suite"]
        grid = PairGrid(count=config.grid or 200, seed=config.seed)
        pole = options["pole"]
        if suite == "upper":
            reports = [verifier.verify_upper_n2(grid)]
        elif suite == "lower":
            reports = [verifier.verify_lower_n2(grid)]
        elif suite == "pole":
            poles = [pole] if pole is not None else DEFAULT_POLES
            reports = [verifier.verify_fixed_pole(p) for p in poles]
        elif suite == "deriv":
            reports = [verifier.verify_derivative_bounds(grid, options["order"])]
        else:
            reports = [verifier.singular_cancellation(pole or (1.0, 0.0))]

        for n, estimate in enumerate(reports):
            name = estimate.experiment
            if len(reports) > 1:
                name = f"{name}{n}"
            writer.write_csv(name, estimate.header, estimate.rows)

        payload.update(
            suite=suite,
            gamma0=verifier.gamma.gamma0,
            reports=[estimate.to_dict() for estimate in reports],
            failed=not all(estimate.passed for estimate in reports),
        )
        return payload
