import numpy as np
from hormander.commands import RunCommand
from hormander.commands import parse_floats
from joblib import Parallel
from joblib import delayed
from tqdm import tqdm

from ...distance import surrogate_sphere
from ...gamma import GammaGrushin
from ...gamma import calibrate_gamma0
from ...gamma import parse_word
from ...gamma import render_word
from ...sampling import PairGrid
from ...sampling import dilate

SATURATION_GATE = 1e-6
SYMMETRY_GATE = 1e-8
DERIVATIVE_GATES = {1: 1e-4, 2: 1e-3, 3: 1e-3}


def _relative(a, b):
    return np.abs(a - b) / np.maximum(np.abs(b), 1e-300)


class Command(RunCommand):

    help = """
        Evaluates the fundamental solution of the Grushin plane on --grid
        seeded pairs: closed form against the saturation quadrature,
        symmetry and homogeneity, derivative words by quadrature and by
        finite differences, and the pole radius and decay around --pole.
    """.replace(
        "    ",
        "",
    )

    subcommand = "gamma"

    def add_run_arguments(self, parser):
        parser.add_argument(
            "--pole",
            type=parse_floats,
            default=(1.0, 0.0),
            help="Pole x of the pole radius and decay probes (default 1,0)",
        )
        parser.add_argument(
            "--words",
            default="",
            help="Comma separated derivative words, like 'X1^y,X1^x X2^y'",
        )
        parser.add_argument(
            "--calibrate",
            default=False,
            action="store_true",
            help="If set, γ₀ is calibrated instead of taken as 1",
        )

    def run(self, spec, config, writer, options):
        quad = config.quadrature()
        gamma = GammaGrushin.for_system(spec)
        words = [parse_word(w) for w in options["words"].split(",") if w.strip()]

        payload = {"quadrature": quad.to_dict()}
        if options["calibrate"]:
            calibration = calibrate_gamma0(gamma, quad)
            gamma = gamma.with_gamma0(calibration.gamma0)
            payload["calibration"] = calibration.to_dict()
        payload["gamma0"] = gamma.gamma0

        grid = PairGrid(count=config.grid or 20, seed=config.seed)
        x, y, d = grid.pairs()
        closed = gamma.closed_form(x, y)
        saturation = np.array(
            Parallel(n_jobs=config.threads, prefer="threads")(
                delayed(gamma.saturation)(a, b, quad)
                for a, b in tqdm(list(zip(x, y)), disable=not config.progress)
            ),
        )
        error = _relative(saturation, closed)
        writer.write_csv(
            "values",
            (
                "x1",
                "x2",
                "y1",
                "y2",
                "d",
                "closed_form",
                "saturation",
                "relative_error",
            ),
            [
                [*a, *b, r, c, s, e]
                for a, b, r, c, s, e in zip(x, y, d, closed, saturation, error)
            ],
        )

        lam = 2.0 ** np.linspace(-3, 3, len(x))
        scaled = np.array(
            [
                gamma.closed_form(dilate(a, s), dilate(b, s))
                for a, b, s in zip(x, y, lam)
            ],
        )
        symmetry = float(np.max(_relative(gamma.closed_form(y, x), closed)))
        homogeneity = float(np.max(_relative(scaled * lam, closed)))
        checks = {
            "saturation_max_relative_error": float(np.max(error)),
            "symmetry_max_relative_error": symmetry,
            "homogeneity_max_relative_error": homogeneity,
        }
        failed = (
            checks["saturation_max_relative_error"] > SATURATION_GATE
            or symmetry > SYMMETRY_GATE
            or homogeneity > SYMMETRY_GATE
        )

        derivatives = []
        for word in words:
            values = [gamma.derivative(a, b, word, quad) for a, b in zip(x, y)]
            worst = max(v.relative_difference for v in values)
            gate = DERIVATIVE_GATES.get(len(word), DERIVATIVE_GATES[3])
            failed = failed or worst > gate
            derivatives.append(
                {
                    "word": render_word(word),
                    "max_relative_difference": worst,
                    "gate": gate,
                },
            )
            writer.write_csv(
                f"derivative_{render_word(word).replace(' ', '_').replace('^', '')}",
                ("x1", "x2", "y1", "y2", "quadrature", "finite_difference"),
                [
                    [*a, *b, v.quadrature, v.finite_difference]
                    for a, b, v in zip(x, y, values)
                ],
            )

        pole = np.asarray(options["pole"], dtype=float)
        radii = np.logspace(-3, 2, 11)
        unit_sphere = surrogate_sphere(pole, 1.0)
        threshold = 10 * float(np.max(gamma.closed_form(pole, unit_sphere)))
        payload.update(
            sample=grid.to_dict(),
            checks=checks,
            derivatives=derivatives,
            pole={
                "x": pole.tolist(),
                "threshold": threshold,
                "radius": gamma.pole_radius(pole, threshold),
                "decay": [
                    {"t": t, "gamma": v, "X1y_gamma": g}
                    for t, v, g in gamma.decay_profile(pole, (1.0, 1.0), radii)
                ],
            },
            failed=failed,
        )
        return payload
