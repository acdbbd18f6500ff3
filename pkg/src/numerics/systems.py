from symbolic.dsl import SystemSpec
from symbolic.poly import Polynomial


class UnsupportedSystemError(Exception):
    pass


def is_grushin1(spec: SystemSpec) -> bool:
    """Whether the system is X1 = (1, 0), X2 = (0, x1) on weights [1, 2]."""
    if tuple(spec.sigma) != (1, 2) or spec.m != 2 or spec.drift is not None:
        return False
    x1 = Polynomial.variable(spec.context, "x1")
    expected = [(1, 0), (0, x1)]
    return all(
        c == e for f, row in zip(spec.fields, expected) for c, e in zip(f.coeffs, row)
    )


def require_grushin1(spec: SystemSpec):
    if not is_grushin1(spec):
        raise UnsupportedSystemError(
            "Only the Grushin system X1 = (1, 0), X2 = (0, x1) with weights "
            "[1, 2] has a computable fundamental solution",
        )
