from django.conf import settings
from hormander.commands import RunCommand
from hormander.commands import parse_floats
from symbolic.lie import lie_basis
from symbolic.volume import build_profile

from ...gamma import GammaGrushin
from ...gamma import calibrate_gamma0
from ...potential import TEST_FUNCTIONS
from ...potential import MeanValueOperators
from ...potential import fitted_doubling_constant
from ...potential import mean_value_table


class Command(RunCommand):

    help = """
        Computes the surface and solid mean values m_r and M_r of the test
        functions over the superlevel sets of the calibrated Grushin
        fundamental solution, and checks the mean-value identities for
        harmonic functions, the sub-mean inequalities and the monotonicity
        in r for subharmonic ones. --grid sets the contour mesh.
    """.replace(
        "    ",
        "",
    )

    subcommand = "potential"

    def add_run_arguments(self, parser):
        parser.add_argument(
            "--pole",
            type=parse_floats,
            action="append",
            default=None,
            help="Pole x, may be repeated (default: 1,0 and 0,0)",
        )
        parser.add_argument(
            "--levels",
            type=parse_floats,
            default=(0.5, 1.0, 2.0),
            help="Comma separated level parameters r",
        )
        parser.add_argument(
            "--funcs",
            default=",".join(TEST_FUNCTIONS),
            help="Comma separated test functions among " + ", ".join(TEST_FUNCTIONS),
        )
        parser.add_argument(
            "--alpha",
            type=float,
            default=None,
            help="Exponent α > 2 of the solid kernel (default: HORMANDER_ALPHA)",
        )

    def run(self, spec, config, writer, options):
        poles = options["pole"] or [(1.0, 0.0), (0.0, 0.0)]
        for pole in poles:
            if len(pole) != 2:
                raise ValueError(f"Pole {list(pole)} is not in R^2")
        functions = [n.strip() for n in options["funcs"].split(",") if n.strip()]
        alpha = options["alpha"] if options["alpha"] is not None else settings.ALPHA
        levels = options["levels"]
        if any(r <= 0 for r in levels):
            raise ValueError(f"Level parameters must be positive, got {list(levels)}")

        quad = config.quadrature()
        calibration = calibrate_gamma0(GammaGrushin.for_system(spec), quad)
        gamma = GammaGrushin.for_system(spec, calibration.gamma0)
        operators = MeanValueOperators(
            gamma,
            alpha=alpha,
            mesh=config.grid or settings.CONTOUR_MESH,
        )

        table = mean_value_table(
            operators,
            poles,
            levels,
            functions,
            n_jobs=config.threads,
            progress=config.progress,
        )
        writer.write_csv("mean_values", table.HEADER, table.csv_rows())

        r = min(levels)
        profile = build_profile(spec, lie_basis(spec))
        checks = []
        for pole in poles:
            checks.append(
                {
                    "gauss_green": operators.gauss_green(pole, r),
                    "deficits": operators.deficit_functionals(
                        pole,
                        r,
                        steps=8,
                    ).to_dict(),
                    "inclusion_theta": operators.inclusion_theta(pole, r),
                    "kernel_minima": operators.kernel_minima(pole, r),
                    "a8_decay": [
                        {"k": k, "integral": operators.a8_integral(pole, k)}
                        for k in (1.0 / r, 2.0 / r, 4.0 / r)
                    ],
                    "doubling": fitted_doubling_constant(profile, pole, levels),
                },
            )

        return {
            "gamma0": gamma.gamma0,
            "calibration": calibration.to_dict(),
            "alpha": alpha,
            "levels": list(levels),
            "functions": functions,
            "table": table.to_dict(),
            "checks": checks,
            "failed": not table.passed,
        }
