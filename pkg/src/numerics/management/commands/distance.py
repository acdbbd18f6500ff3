from hormander.commands import RunCommand
from hormander.commands import parse_floats

from ...distance import DistanceOptimizer
from ...distance import DistanceOptions
from ...distance import grushin_distance_surrogate
from ...distance import hom_norm
from ...systems import is_grushin1


class Command(RunCommand):

    help = """
        Certifies an upper bound for the Carnot-Carathéodory distance between
        two points by optimizing piecewise-constant controls. --grid sets the
        number of control segments. The optimal controls are written as CSV.
    """.replace(
        "    ",
        "",
    )

    subcommand = "distance"

    def add_run_arguments(self, parser):
        parser.add_argument(
            "--from",
            dest="start",
            type=parse_floats,
            required=True,
            help="Start point, comma separated",
        )
        parser.add_argument(
            "--to",
            dest="end",
            type=parse_floats,
            required=True,
            help="End point, comma separated",
        )
        parser.add_argument(
            "--control-norm",
            choices=("sup", "euclidean"),
            default="sup",
            help="Bound |a_j| <= r for every j (sup) or |a| <= r (euclidean)",
        )
        parser.add_argument(
            "--integrator",
            choices=("flow", "rk4"),
            default="flow",
            help="Exact nilpotent flow or RK4 along each control segment",
        )
        parser.add_argument(
            "--restarts",
            type=int,
            default=None,
            help="Number of optimizer restarts (default: HORMANDER_DISTANCE_RESTARTS)",
        )
        parser.add_argument(
            "--drift",
            default=False,
            action="store_true",
            help="If set, the drift is steered by an extra control a0",
        )

    def run(self, spec, config, writer, options):
        x, y = options["start"], options["end"]
        for point in (x, y):
            if len(point) != spec.n:
                raise ValueError(f"Point {list(point)} is not in R^{spec.n}")

        distance_options = DistanceOptions.from_settings(
            segments=config.grid,
            restarts=options["restarts"],
            integrator=options["integrator"],
            control_norm=options["control_norm"],
            drift=options["drift"],
            seed=config.seed,
            n_jobs=config.threads,
        )
        optimizer = DistanceOptimizer(spec, distance_options)
        result = optimizer.upper_bound(x, y, progress=config.progress)

        payload = {
            "from": list(x),
            "to": list(y),
            "distance": result.to_dict(),
            "hom_norm": hom_norm(spec.sigma, [b - a for a, b in zip(x, y)]),
        }
        if is_grushin1(spec):
            surrogate = float(grushin_distance_surrogate(x, y))
            payload["surrogate"] = surrogate
            payload["ratio_to_surrogate"] = result.r / surrogate
        payload["controls_csv"] = writer.write_csv(
            "controls",
            result.path.header(),
            result.path.rows(),
        )
        return payload
