import numpy as np
from hormander.commands import RunCommand

from ...admissibility import check_admissible
from ...reports import analyze_report
from ...volume import build_profile
from ...volume import sample_table


class Command(RunCommand):

    help = """
        Checks that a system is an admissible homogeneous Hörmander system,
        computes its Lie basis and the f_k table of its ball-volume
        polynomial. With --volume, f_k is sampled on --grid seeded points of
        [-1, 1]^n and written as CSV.
    """.replace(
        "    ",
        "",
    )

    subcommand = "analyze"

    def add_run_arguments(self, parser):
        parser.add_argument(
            "--volume",
            default=False,
            action="store_true",
            help="If set, a CSV table of sampled f_k values is written",
        )

    def run(self, spec, config, writer, options):
        messages, basis = check_admissible(spec, seed=config.seed)
        messages.log_messages()

        profile = build_profile(spec, basis) if basis is not None else None
        payload = analyze_report(spec, messages, basis, profile)

        if options["volume"] and profile is not None:
            rng = np.random.default_rng(config.seed)
            points = rng.uniform(-1.0, 1.0, (config.grid or 16, spec.n))
            header = [f"x{i + 1}" for i in range(spec.n)] + ["k", "f_k"]
            path = writer.write_csv("volume", header, sample_table(profile, points))
            payload["volume_csv"] = path

        payload["failed"] = messages.has_error()
        return payload
