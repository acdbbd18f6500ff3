import functools
import logging
import math
from dataclasses import dataclass
from dataclasses import replace
from typing import Callable
from typing import Iterable
from typing import Tuple

import numpy as np
from django.conf import settings
from scipy import integrate

logger = logging.getLogger("hormander.quadrature")


class QuadratureError(Exception):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    limit: int = 200
    max_levels: int = 7

    @classmethod
    def from_settings(cls, **overrides) -> "QuadratureSpec":
        spec = cls(
            rel_tol=settings.QUAD_REL_TOL,
            abs_tol=settings.QUAD_ABS_TOL,
            limit=settings.QUAD_LIMIT,
            max_levels=settings.QUAD_MAX_LEVELS,
        )
        return replace(spec, **{k: v for k, v in overrides.items() if v is not None})

    def accepts(self, value: float, error: float) -> bool:
        return error <= max(self.abs_tol, self.rel_tol * abs(value))

    def to_dict(self) -> dict:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "limit": self.limit,
            "max_levels": self.max_levels,
        }


def to_compact(eta: float) -> float:
    """Inverse of η = s/(1−s²) on s ∈ (−1, 1)."""
    if eta == 0:
        return 0.0
    return (-1.0 + math.sqrt(1.0 + 4.0 * eta * eta)) / (2.0 * eta)


def compactified_quad(
    f: Callable[[float], float],
    spec: QuadratureSpec,
    points: Iterable[float] = (),
) -> Tuple[float, float]:
    """
    ∫_ℝ f(η) dη after the substitution η = s/(1−s²). ``points`` are η values
    near which f varies quickly; they become breakpoints in s.
    """

    def integrand(s):
        w = 1.0 - s * s
        if w <= 0:
            return 0.0
        return f(s / w) * (1.0 + s * s) / (w * w)

    breaks = sorted({round(to_compact(p), 15) for p in points})
    breaks = [s for s in breaks if -1 < s < 1]
    value, error, *rest = integrate.quad(
        integrand,
        -1.0,
        1.0,
        points=breaks or None,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.limit,
        full_output=1,
    )
    if not spec.accepts(value, error):
        raise QuadratureError(
            f"Improper integral missed its tolerance: value {value:.6g}, "
            f"estimated error {error:.3g}",
            estimate=error,
        )
    return value, error


@functools.lru_cache(maxsize=64)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(n: int, a: float, b: float):
    """Nodes and weights of the n-point Gauss–Legendre rule on [a, b]."""
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def periodic_nodes(n: int):
    """Trapezoid nodes and weights for a 2π-periodic integrand."""
    theta = 2 * math.pi * np.arange(n) / n
    return theta, np.full(n, 2 * math.pi / n)


def refine_until(
    evaluate: Callable[[int], float],
    spec: QuadratureSpec,
    what: str = "integral",
    order: int = 0,
) -> Tuple[float, float]:
    """
    Evaluates ``evaluate(level)`` for level 0, 1, ... until two consecutive
    values agree within the tolerance. Each level is expected to double the
    resolution of the rule behind ``evaluate``.

    With ``order`` p > 0 the rule is taken to converge like h^p and the
    accepted value is Richardson-extrapolated from the last two levels.
    """
    previous = evaluate(0)
    error = math.inf
    for level in range(1, spec.max_levels + 1):
        current = evaluate(level)
        error = abs(current - previous)
        logger.debug(f"{what}: level {level} value {current:.12g} change {error:.3g}")
        if spec.accepts(current, error):
            if order:
                gain = 2**order - 1
                return current + (current - previous) / gain, error / gain
            return current, error
        previous = current
    raise QuadratureError(
        f"The {what} did not converge in {spec.max_levels} refinements "
        f"(last change {error:.3g})",
        estimate=error,
    )
