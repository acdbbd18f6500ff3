from hormander.commands import RunCommand

from ...lie import lie_basis
from ...lifting import build_lift
from ...reports import lift_report


class Command(RunCommand):

    help = """
        Lifts a system to a free Carnot group: prints the group law, the
        inverse, the dilations and the lifted fields, and checks the group
        structure as exact polynomial identities.
    """.replace(
        "    ",
        "",
    )

    subcommand = "lift"

    def run(self, spec, config, writer, options):
        lift = build_lift(spec, lie_basis(spec))
        checks = lift.verify()
        payload = lift_report(lift, checks)
        payload["failed"] = not all(checks.values())
        return payload
