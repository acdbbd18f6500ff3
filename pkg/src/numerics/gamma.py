"""
Fundamental solution of the Grushin operator ∂₁² + (x₁∂₂)² on ℝ².

The system lifts to the Heisenberg group with coordinates (x₁, x₂, ξ₁) and
Γ(x;y) is the saturation ∫ Γ_G((x,0)⁻¹∗(y,η)) dη of the Heisenberg kernel
Γ_G = γ₀·P^(−1/2), P = (x₁²+ξ₁²)² + 16(x₂ − x₁ξ₁/2)². The integral has the
closed form γ₀√2·S^(−1/2)·K(m) with S = √((x₁²+y₁²)² + 4(x₂−y₂)²) and
m = ½ + x₁y₁/S.
"""
import logging
import math
import re
from dataclasses import dataclass
from dataclasses import field
from fractions import Fraction
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from symbolic.dsl import SystemSpec
from symbolic.lifting import LiftedSystem
from symbolic.lifting import build_lift
from symbolic.poly import Context
from symbolic.poly import Polynomial
from symbolic.poly import determinant
from symbolic.poly import jacobian

from .distance import grushin_distance_surrogate
from .distance import surrogate_sphere
from .elliptic import elliptic_K
from .elliptic import elliptic_K_derivative
from .kernels import RadicalExpression
from .quadrature import QuadratureSpec
from .quadrature import compactified_quad
from .quadrature import gauss_legendre
from .quadrature import periodic_nodes
from .quadrature import refine_until
from .systems import UnsupportedSystemError
from .systems import require_grushin1

logger = logging.getLogger("hormander.gamma")


class PoleError(ValueError):
    pass


class CalibrationError(Exception):
    pass


# Finite-difference steps relative to the distance, by derivative order.
FD_STEP = {1: 1e-4, 2: 1e-4, 3: 1e-3}

WORD_PATTERN = re.compile(r"X([12])\^?([xy])")

Word = Tuple[Tuple[str, int], ...]


def heisenberg_radicand(context: Context) -> Polynomial:
    x1, x2, xi1 = context.variables()
    return (x1 * x1 + xi1 * xi1) ** 2 + (x2 - x1 * xi1 * Fraction(1, 2)) ** 2 * 16


def gamma_G_heis(z, gamma0: float = 1.0):
    """γ₀·((x₁²+ξ²)² + 16(x₂−½x₁ξ)²)^(−1/2) on points (..., 3)."""
    z = np.asarray(z, dtype=float)
    x1, x2, xi = z[..., 0], z[..., 1], z[..., 2]
    radicand = (x1 * x1 + xi * xi) ** 2 + 16 * (x2 - 0.5 * x1 * xi) ** 2
    if np.any(radicand == 0):
        raise PoleError("Γ_G has its pole at the origin")
    value = gamma0 / np.sqrt(radicand)
    return float(value) if value.ndim == 0 else value


def parse_word(text: str) -> Word:
    """'X1^x X2^y' or 'X1x*X2y' into (('x', 1), ('y', 2))."""
    compact = re.sub(r"[\s*]", "", text)
    letters = WORD_PATTERN.findall(compact)
    if not letters or WORD_PATTERN.sub("", compact):
        raise ValueError(f"Not a derivative word over X1, X2 in x or y: {text!r}")
    return tuple((v, int(i)) for i, v in letters)


def render_word(word: Word) -> str:
    return " ".join(f"X{i}^{v}" for v, i in word)


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.broadcast_arrays(x, y)


@dataclass(frozen=True)
class DerivativeValue:
    word: Word
    quadrature: Optional[float]
    finite_difference: float
    quadrature_error: Optional[float] = None

    @property
    def relative_difference(self) -> Optional[float]:
        if self.quadrature is None:
            return None
        scale = max(abs(self.quadrature), abs(self.finite_difference), 1e-300)
        return abs(self.quadrature - self.finite_difference) / scale


@dataclass(frozen=True)
class Bump:
    """φ(y) = A·exp(−1/(1−u)), u = |y−c|²/s², supported in the disc |y−c| < s."""

    center: Tuple[float, float] = (1.0, 0.0)
    radius: float = 0.5
    amplitude: float = 1.0

    def _u(self, points):
        points = np.asarray(points, dtype=float)
        d = points - np.asarray(self.center)
        return d, np.sum(d * d, axis=-1) / self.radius**2

    def __call__(self, points):
        _, u = self._u(points)
        inside = u < 1
        safe = np.where(inside, u, 0.0)
        return np.where(inside, self.amplitude * np.exp(-1.0 / (1.0 - safe)), 0.0)

    def grushin_laplacian(self, points):
        """(∂₁² + y₁²∂₂²)φ."""
        points = np.asarray(points, dtype=float)
        d, u = self._u(points)
        inside = u < 1
        w = 1.0 - np.where(inside, u, 0.0)
        psi = self.amplitude * np.exp(-1.0 / w)
        d1 = -psi / w**2
        d2 = psi / w**4 - 2 * psi / w**3
        s2 = self.radius**2
        second = [d2 * 4 * d[..., k] ** 2 / s2**2 + d1 * 2 / s2 for k in range(2)]
        value = second[0] + points[..., 0] ** 2 * second[1]
        return np.where(inside, value, 0.0)


@dataclass(frozen=True)
class CalibrationResult:
    gamma0: float
    reference: Tuple[float, float]
    checks: List[dict] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((c["residual"] for c in self.checks), default=0.0)

    def to_dict(self) -> dict:
        return {
            "gamma0": self.gamma0,
            "reference": list(self.reference),
            "checks": self.checks,
            "max_residual": self.max_residual,
        }


class GammaGrushin:
    def __init__(self, gamma0: float = 1.0, lift: Optional[LiftedSystem] = None):
        self.gamma0 = float(gamma0)
        self.lift = lift
        self._derivative_kernels = {}

    @classmethod
    def for_system(cls, spec: SystemSpec, gamma0: float = 1.0) -> "GammaGrushin":
        require_grushin1(spec)
        lift = build_lift(spec)
        gamma = cls(gamma0, lift)
        if not gamma.kernel_is_harmonic():
            raise UnsupportedSystemError(
                "The lifted coordinates do not carry the Heisenberg kernel",
            )
        return gamma

    def with_gamma0(self, gamma0: float) -> "GammaGrushin":
        return GammaGrushin(gamma0, self.lift)

    # closed form

    def _require_lift(self):
        if self.lift is None:
            raise UnsupportedSystemError("This evaluation needs the Heisenberg lift")

    @staticmethod
    def _check_pole(x, y):
        if np.any(np.all(x == y, axis=-1)):
            raise PoleError("Γ(x;y) has its pole at y = x")

    @staticmethod
    def _invariants(x, y):
        x1, x2 = x[..., 0], x[..., 1]
        y1, y2 = y[..., 0], y[..., 1]
        a = x1 * x1 + y1 * y1
        b = x2 - y2
        s = np.sqrt(a * a + 4 * b * b)
        p = x1 * y1
        m = 0.5 + p / s
        cancelling = p > 0
        safe = np.where(cancelling, s + 2 * p, 1.0)
        m1 = np.where(
            cancelling,
            ((x1 * x1 - y1 * y1) ** 2 + 4 * b * b) / (2 * s * safe),
            0.5 - p / s,
        )
        return a, b, s, m, m1

    def elliptic_parameter(self, x, y):
        x, y = _pair(x, y)
        self._check_pole(x, y)
        return self._invariants(x, y)[3]

    def closed_form(self, x, y):
        x, y = _pair(x, y)
        self._check_pole(x, y)
        _, _, s, m, m1 = self._invariants(x, y)
        value = self.gamma0 * math.sqrt(2) / np.sqrt(s) * elliptic_K(m, m1)
        return float(value) if np.ndim(value) == 0 else value

    __call__ = closed_form

    def gradient_y(self, x, y):
        """(∂Γ/∂y₁, ∂Γ/∂y₂), shape (..., 2)."""
        x, y = _pair(x, y)
        self._check_pole(x, y)
        a, b, s, m, m1 = self._invariants(x, y)
        x1, y1 = x[..., 0], y[..., 0]
        s = np.asarray(s)
        k = np.asarray(elliptic_K(m, m1))
        dk = np.asarray(elliptic_K_derivative(m, m1))
        ds = np.stack([2 * a * y1 / s, -4 * b / s], axis=-1)
        dm = np.stack(
            [x1 / s - x1 * y1 * ds[..., 0] / s**2, -x1 * y1 * ds[..., 1] / s**2],
            axis=-1,
        )
        scale = self.gamma0 * math.sqrt(2)
        s_ = s[..., None]
        outer = -0.5 * s_**-1.5 * ds * k[..., None]
        return scale * (outer + s_**-0.5 * dk[..., None] * dm)

    def gradient_x(self, x, y):
        return self.gradient_y(y, x)

    def horizontal_y(self, x, y):
        """(X₁Γ_x, X₂Γ_x)(y) = (∂_{y₁}Γ, y₁∂_{y₂}Γ)."""
        x, y = _pair(x, y)
        g = self.gradient_y(x, y)
        return np.stack([g[..., 0], y[..., 0] * g[..., 1]], axis=-1)

    def horizontal_x(self, x, y):
        return self.horizontal_y(y, x)

    # saturation

    def saturation(self, x, y, quad: QuadratureSpec = None) -> float:
        quad = quad or QuadratureSpec()
        x1, x2 = (float(v) for v in x)
        y1, y2 = (float(v) for v in y)
        if (x1, x2) == (y1, y2):
            raise PoleError("Γ(x;y) has its pole at y = x")
        d1 = (x1 - y1) ** 2
        d2 = 2 * (x2 - y2)
        t = x1 + y1

        def integrand(eta):
            return 1.0 / math.sqrt((d1 + eta * eta) ** 2 + 4 * (d2 + eta * t) ** 2)

        points = [0.0]
        if t != 0:
            points.append(-d2 / t)
        value, _ = compactified_quad(integrand, quad, points)
        return self.gamma0 * value

    # symbolic kernels on the lift

    def kernel(self) -> RadicalExpression:
        self._require_lift()
        return RadicalExpression.power(
            heisenberg_radicand(self.lift.context),
            Fraction(-1, 2),
        )

    def kernel_is_harmonic(self) -> bool:
        """Σ X̃_j² P^(−1/2) vanishes identically on the lifted coordinates."""
        self._require_lift()
        kernel = self.kernel()
        total = None
        for f in self.lift.fields:
            term = kernel.apply(f).apply(f)
            total = term if total is None else total + term
        return total.is_zero()

    def _lifted_derivative(
        self,
        letters: Sequence[int],
        inner=None,
    ) -> RadicalExpression:
        expression = inner if inner is not None else self.kernel()
        for i in reversed(letters):
            expression = expression.apply(self.lift.fields[i - 1])
        return expression

    def _reflected(self, expression: RadicalExpression) -> RadicalExpression:
        return expression.substitute(list(self.lift.inverse))

    def _compiled(self, word: Word):
        if word not in self._derivative_kernels:
            xs = [i for v, i in word if v == "x"]
            ys = [i for v, i in word if v == "y"]
            if xs and ys:
                inner = self._reflected(self._lifted_derivative(ys))
                expression = self._lifted_derivative(xs, inner)
                mode = "x"
            elif ys:
                expression, mode = self._lifted_derivative(ys), "y"
            else:
                expression, mode = self._lifted_derivative(xs), "x"
            self._derivative_kernels[word] = (expression.compile(), mode)
        return self._derivative_kernels[word]

    def _group_points(self, base, target, eta):
        """(base,0)⁻¹ ∗ (target, η) for an array of η."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        inverse = self.lift.compiled_inverse(np.array([base[0], base[1], 0.0]))
        left = np.broadcast_to(inverse, (eta.size, 3))
        right = np.stack(
            [np.full(eta.size, target[0]), np.full(eta.size, target[1]), eta],
            axis=-1,
        )
        return self.lift.compiled_law(np.concatenate([left, right], axis=-1))

    def derivative_quadrature(self, x, y, word: Word, quad: QuadratureSpec = None):
        """Representation formula: ∫ of the lifted derivative kernel over η."""
        self._require_lift()
        quad = quad or QuadratureSpec()
        x = [float(v) for v in x]
        y = [float(v) for v in y]
        if x == y:
            raise PoleError("Γ(x;y) has its pole at y = x")
        compiled, mode = self._compiled(tuple(word))
        base, target = (x, y) if mode == "y" else (y, x)

        def integrand(eta):
            return float(compiled(self._group_points(base, target, eta))[0])

        probe = self._group_points(base, target, [0.0, 1.0])
        s0 = probe[0, 1] - 0.5 * probe[0, 0] * probe[0, 2]
        s1 = probe[1, 1] - 0.5 * probe[1, 0] * probe[1, 2]
        points = [0.0]
        if s1 != s0:
            points.append(-s0 / (s1 - s0))
        value, error = compactified_quad(integrand, quad, points)
        return self.gamma0 * value, self.gamma0 * error

    def finite_difference_steps(self, x, y, order: int):
        d = float(grushin_distance_surrogate(x, y))
        h = FD_STEP.get(order, FD_STEP[3]) * d
        if h <= 0 or not math.isfinite(h):
            raise PoleError("Finite-difference step underflows at this pair")
        return h, h * (max(abs(x[0]), abs(y[0])) + d)

    def derivative_finite_difference(self, x, y, word: Word) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        steps = self.finite_difference_steps(x, y, len(word))

        def nested(letters, x, y):
            if not letters:
                return self.closed_form(x, y)
            (variable, i), rest = letters[0], letters[1:]
            point = x if variable == "x" else y
            k = i - 1
            e = np.zeros(2)
            e[k] = steps[k]

            def shifted(sign):
                moved = point + sign * e
                if variable == "x":
                    return nested(rest, moved, y)
                return nested(rest, x, moved)

            difference = (shifted(1) - shifted(-1)) / (2 * steps[k])
            return difference if i == 1 else point[0] * difference

        return float(nested(tuple(word), x, y))

    def derivative(
        self,
        x,
        y,
        word: Word,
        quad: QuadratureSpec = None,
        paths=("fd", "quad"),
    ):
        fd = self.derivative_finite_difference(x, y, word)
        value, error = (None, None)
        if "quad" in paths:
            value, error = self.derivative_quadrature(x, y, word, quad)
        return DerivativeValue(tuple(word), value, fd, error)

    # pole and decay

    def pole_radius(self, x, threshold: float = 1e3, count: int = 64) -> float:
        """
        Largest surrogate radius δ (to bisection accuracy) with Γ(x;y) ≥
        threshold on the whole surrogate sphere of radius δ.
        """
        x = np.asarray(x, dtype=float)

        def holds(rho):
            sphere = surrogate_sphere(x, rho, count)
            return np.min(self.closed_form(x, sphere)) >= threshold

        hi = 1.0
        while holds(hi):
            hi *= 2
        lo = hi / 2
        while not holds(lo):
            lo /= 2
            if lo < 1e-300:
                raise PoleError(f"Γ never exceeds {threshold} near {x.tolist()}")
        for _ in range(60):
            mid = math.sqrt(lo * hi)
            if holds(mid):
                lo = mid
            else:
                hi = mid
            if hi / lo < 1 + 1e-10:
                break
        return lo

    def decay_profile(self, x, direction, radii) -> List[Tuple[float, float, float]]:
        """(t, Γ, |X₁^yΓ|) at y = x + t·direction."""
        x = np.asarray(x, dtype=float)
        direction = np.asarray(direction, dtype=float)
        ys = x + np.asarray(radii, dtype=float)[:, None] * direction
        values = self.closed_form(x, ys)
        first = np.abs(self.horizontal_y(x, ys)[..., 0])
        return [(float(t), float(v), float(g)) for t, v, g in zip(radii, values, first)]


# calibration


def _disc_rule(bump: Bump, origin, level: int):
    """Polar tensor rule on the bump's support disc around an interior origin."""
    theta, wt = periodic_nodes(16 * 2**level)
    w, ww = gauss_legendre(8 * 2**level, 0.0, 1.0)
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    offset = np.asarray(origin) - np.asarray(bump.center)
    b = e @ offset
    reach = -b + np.sqrt(b * b - (offset @ offset - bump.radius**2))
    rho = reach[:, None] * w[None, :] ** 2
    jac = 2 * reach[:, None] * w[None, :] * rho
    points = np.asarray(origin) + rho[..., None] * e[:, None, :]
    weights = wt[:, None] * ww[None, :] * jac
    return points, weights


def representation_integral(gamma: GammaGrushin, bump: Bump, x, quad: QuadratureSpec):
    """∫ Γ(x;y)·(Lφ)(y) dy with the kernel's current γ₀."""
    x = np.asarray(x, dtype=float)
    offset = x - np.asarray(bump.center)
    origin = x if offset @ offset < bump.radius**2 else np.asarray(bump.center)

    def evaluate(level):
        # the rule never places a node on the origin
        points, weights = _disc_rule(bump, origin, level)
        values = gamma.closed_form(x, points) * bump.grushin_laplacian(points)
        return float(np.sum(values * weights))

    return refine_until(evaluate, quad, what="calibration integral")


def calibrate_gamma0(
    gamma: GammaGrushin = None,
    quad: QuadratureSpec = None,
    bump: Bump = None,
    reference=None,
    checks: Sequence = None,
    gate: float = 1e-2,
) -> CalibrationResult:
    """
    γ₀ with ∫Γ(x;y)Lφ(y)dy = −φ(x) at the reference point, checked at the
    other points. The integral is linear in γ₀, so it is computed once with
    γ₀ = 1 and scaled.
    """
    unit = (gamma or GammaGrushin()).with_gamma0(1.0)
    quad = quad or QuadratureSpec()
    bump = bump or Bump()
    center = np.asarray(bump.center)
    reference = np.asarray(reference if reference is not None else center, dtype=float)
    if checks is None:
        checks = [center + [0.1, 0.05], center + [-0.15, 0.1]]

    integral, _ = representation_integral(unit, bump, reference, quad)
    phi = float(bump(reference))
    if integral == 0 or phi == 0:
        raise CalibrationError("The reference point lies outside the bump's support")
    gamma0 = -phi / integral
    logger.info(f"Calibrated γ₀ = {gamma0:.12g} at {reference.tolist()}")

    results = []
    for point in checks:
        point = np.asarray(point, dtype=float)
        value, error = representation_integral(unit, bump, point, quad)
        target = -float(bump(point))
        recovered = gamma0 * value
        residual = abs(recovered - target) / max(abs(target), 1e-300)
        results.append(
            {
                "point": point.tolist(),
                "recovered": recovered,
                "expected": target,
                "residual": residual,
                "quadrature_change": gamma0 * error,
            },
        )
        if residual > gate:
            raise CalibrationError(
                f"Calibration residual {residual:.3g} at {point.tolist()} "
                f"exceeds {gate}",
            )
    return CalibrationResult(gamma0, tuple(reference.tolist()), results)


# change of variables on the lift


def phi_polynomials(lift: LiftedSystem) -> Tuple[Context, List[Polynomial]]:
    """
    Φ_{x,y}(ζ): the ξ-part of (x,0)∗(x,ζ)⁻¹∗(y,0), as polynomials in
    (x, y, ζ).
    """
    sigma, tau = lift.spec.sigma, lift.tau
    context = (
        Context.base(sigma, "x")
        .extend(Context.base(sigma, "y"))
        .extend(Context.base(tau, "zeta"))
    )
    variables = context.variables()
    n, p = lift.n, lift.p
    x, y, zeta = variables[:n], variables[n : 2 * n], variables[2 * n :]
    zero = [Polynomial.zero(context)] * p
    x_zeta = x + zeta
    inverse = [q.substitute(x_zeta) for q in lift.inverse]
    product = lift.compose(lift.compose(x + zero, inverse), y + zero)
    return context, product[n:]


def phi_change_of_variable(lift: LiftedSystem, x, y, zeta) -> tuple:
    context, phi = phi_polynomials(lift)
    point = list(x) + list(y) + list(zeta)
    return tuple(q.evaluate(point) for q in phi)


def phi_identity_holds(lift: LiftedSystem) -> bool:
    """(x,0)⁻¹∗(y,Φ_{x,y}(ζ)) = (x,ζ)⁻¹∗(y,0) as a polynomial identity."""
    context, phi = phi_polynomials(lift)
    variables = context.variables()
    n, p = lift.n, lift.p
    x, y, zeta = variables[:n], variables[n : 2 * n], variables[2 * n :]
    zero = [Polynomial.zero(context)] * p
    x_inverse = [q.substitute(x + zero) for q in lift.inverse]
    left = lift.compose(x_inverse, y + list(phi))
    xz_inverse = [q.substitute(x + zeta) for q in lift.inverse]
    right = lift.compose(xz_inverse, y + zero)
    return left == right


def phi_jacobian(lift: LiftedSystem) -> Polynomial:
    context, phi = phi_polynomials(lift)
    names = context.names[2 * lift.n :]
    return determinant(jacobian(phi, names))

