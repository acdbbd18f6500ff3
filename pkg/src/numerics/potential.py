"""
Mean-value operators of the Grushin operator L = ∂₁² + (x₁∂₂)².

For a pole x and r > 0 the superlevel set Ω_r(x) = {y : Γ(x;y) > 1/r}
carries the surface average

    m_r(u)(x) = ∮_{∂Ω_r(x)} u·K_x dσ,    K_x = Σ|X_jΓ_x|² / |∇Γ_x|

and the solid average

    M_r(u)(x) = (α+1)/r^(α+1) ∫_{Ω_r(x)} u·K^α_x dy,    K^α_x = Σ|X_jΓ_x|² / Γ_x^(2+α).

Both reproduce harmonic functions and bound subharmonic ones from below,
once Γ carries the calibrated constant γ₀.
"""
import logging
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Callable
from typing import Dict
from typing import List
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np
from django.conf import settings
from hormander.loggers import LoggingMixin
from joblib import Parallel
from joblib import delayed
from scipy import integrate
from symbolic.volume import VolumeProfile
from tqdm import tqdm

from .contour import DegenerateLevelError
from .contour import LevelSet
from .contour import LevelSetExtractor
from .contour import outer_radius
from .distance import surrogate_polar
from .gamma import GammaGrushin
from .quadrature import QuadratureSpec
from .quadrature import gauss_legendre
from .quadrature import refine_until

logger = logging.getLogger("hormander.potential")

SCAN_POINTS = 256
SCAN_DECADES = 12
BISECTION_STEPS = 50

# quadrature nodes closer to the pole than this fraction of the first
# crossing are dropped
NEGLIGIBLE_RADIUS = 1e-9

# superlevel sets inside this surrogate radius count as the pole itself
LIMIT_RADIUS = 1e-6

IDENTITY_TOL = 1e-3

# contour meshes double from the base mesh at most this many times
SURFACE_LEVELS = 3


@dataclass(frozen=True)
class SampleFunction:
    name: str
    u: Callable[[np.ndarray], np.ndarray]
    lu: Callable[[np.ndarray], np.ndarray]
    harmonic: bool
    subharmonic: bool

    def __call__(self, points):
        return self.u(np.asarray(points, dtype=float))

    def scale(self, x) -> float:
        return max(1.0, abs(float(self(np.asarray(x, dtype=float)))))


def _zero(p):
    return np.zeros(p.shape[:-1])


TEST_FUNCTIONS: Dict[str, SampleFunction] = {
    f.name: f
    for f in (
        SampleFunction("1", lambda p: np.ones(p.shape[:-1]), _zero, True, True),
        SampleFunction("y1", lambda p: p[..., 0], _zero, True, True),
        SampleFunction("y2", lambda p: p[..., 1], _zero, True, True),
        SampleFunction("y1y2", lambda p: p[..., 0] * p[..., 1], _zero, True, True),
        SampleFunction(
            "y1^2",
            lambda p: p[..., 0] ** 2,
            lambda p: np.full(p.shape[:-1], 2.0),
            False,
            True,
        ),
        SampleFunction(
            "y2^2",
            lambda p: p[..., 1] ** 2,
            lambda p: 2 * p[..., 0] ** 2,
            False,
            True,
        ),
    )
}

FunctionLike = Union[str, SampleFunction, Callable]


def sample_function(u: FunctionLike) -> Callable:
    if isinstance(u, str):
        try:
            return TEST_FUNCTIONS[u]
        except KeyError:
            raise ValueError(
                f"Unknown test function {u!r}; choose from {', '.join(TEST_FUNCTIONS)}",
            )
    return u


def surface_kernel(gamma: GammaGrushin, x, points) -> np.ndarray:
    """K_x = Σ|X_jΓ_x|² / |∇Γ_x|."""
    horizontal = np.sum(gamma.horizontal_y(x, points) ** 2, axis=-1)
    return horizontal / np.linalg.norm(gamma.gradient_y(x, points), axis=-1)


def solid_kernel(gamma: GammaGrushin, x, points, alpha: float) -> np.ndarray:
    """K^α_x = Σ|X_jΓ_x|² / Γ_x^(2+α)."""
    horizontal = np.sum(gamma.horizontal_y(x, points) ** 2, axis=-1)
    return horizontal / gamma.closed_form(x, points) ** (2 + alpha)


def surface_mean(gamma: GammaGrushin, level_set: LevelSet, u: Callable) -> float:
    """m_r(u)(x) on an extracted boundary, trapezoid rule in arc length."""
    x = np.asarray(level_set.pole)

    def values_of(vertices):
        kernel = surface_kernel(gamma, x, vertices)
        if not np.all(np.isfinite(kernel)):
            raise DegenerateLevelError(
                "The surface kernel is singular on the level set "
                f"Γ = {level_set.level:.6g}",
            )
        return u(vertices) * kernel

    return level_set.line_integral(values_of)


@dataclass
class SolidRule:
    """Nodes and weights on Ω_r(x), with Γ_x and Σ|X_jΓ_x|² at the nodes."""

    points: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    horizontal: np.ndarray
    level: int

    def integrate(self, values) -> float:
        return float(np.sum(values * self.weights))


class SolidIntegrator(LoggingMixin):
    """
    Quadrature on Ω_r(x) in the polar coordinates of the surrogate metric.

    Each ray (u, ±) is scanned on a logarithmic radius grid for the stretches
    where Γ_x > 1/r, and every crossing is refined by bisection. The stretch
    that starts at the pole uses ρ = b·exp(1 − 1/w), which smooths the
    logarithmic singularity of Γ at poles off the line x₁ = 0.
    """

    logging_name = "hormander.potential"

    def __init__(self, gamma: GammaGrushin, x, r: float, quad: QuadratureSpec):
        if r <= 0:
            raise ValueError(f"Level parameter r must be positive, got {r}")
        self.gamma = gamma
        self.x = np.asarray(x, dtype=float)
        self.r = float(r)
        self.level = 1.0 / self.r
        self.quad = quad
        self.reach = 1.5 * outer_radius(gamma, self.x, self.level)
        self._rules: Dict[int, SolidRule] = {}

    def _inside(self, u, sign, rho):
        points, _ = surrogate_polar(self.x, rho, u, sign)
        at_pole = np.all(points == self.x, axis=-1)
        safe = np.where(at_pole[..., None], self.x + 1.0, points)
        return at_pole | (self.gamma.closed_form(self.x, safe) > self.level)

    def _bisect(self, u, sign, lo, hi):
        if len(lo) == 0:
            return lo
        inside_lo = self._inside(u, sign, lo)
        for _ in range(BISECTION_STEPS):
            mid = np.sqrt(lo * hi)
            same = self._inside(u, sign, mid) == inside_lo
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        return np.sqrt(lo * hi)

    def intervals(self, u, sign) -> List[List[Tuple[float, float]]]:
        """The radius intervals of each ray that lie in Ω_r(x)."""
        grid = self.reach * np.logspace(-SCAN_DECADES, 0, SCAN_POINTS)
        inside = self._inside(u[:, None], sign[:, None], grid[None, :])
        rays, cols = np.nonzero(inside[:, :-1] != inside[:, 1:])
        crossings = self._bisect(u[rays], sign[rays], grid[cols], grid[cols + 1])
        result = []
        for k in range(len(u)):
            edges = [0.0] if inside[k, 0] else []
            edges.extend(crossings[rays == k].tolist())
            if len(edges) % 2:
                edges.append(self.reach)
            result.append(list(zip(edges[0::2], edges[1::2])))
        return result

    def rule(self, level: int) -> SolidRule:
        if level not in self._rules:
            self._rules[level] = self._build(level)
        return self._rules[level]

    def _build(self, level: int) -> SolidRule:
        count = 8 * 2**level
        left, left_w = gauss_legendre(count, -1.0, 0.0)
        right, right_w = gauss_legendre(count, 0.0, 1.0)
        u = np.tile(np.concatenate([left, right]), 2)
        wu = np.tile(np.concatenate([left_w, right_w]), 2)
        sign = np.repeat([1.0, -1.0], 2 * count)

        w, ww = gauss_legendre(16 * 2**level, 0.0, 1.0)
        rhos, weights, rays = [], [], []
        for k, pieces in enumerate(self.intervals(u, sign)):
            for a, b in pieces:
                if a == 0.0:
                    rho = b * np.exp(1.0 - 1.0 / w)
                    d = ww * rho / w**2
                    keep = rho > NEGLIGIBLE_RADIUS * b
                    rho, d = rho[keep], d[keep]
                else:
                    rho, d = gauss_legendre(len(w), a, b)
                rhos.append(rho)
                weights.append(wu[k] * d)
                rays.append(np.full(len(rho), k))
        if not rhos:
            raise DegenerateLevelError(
                f"No ray from {self.x.tolist()} meets Ω_{self.r:g}; the set is below "
                f"the scan resolution",
            )
        rho = np.concatenate(rhos)
        ray = np.concatenate(rays)
        points, jacobian = surrogate_polar(self.x, rho, u[ray], sign[ray])
        weights = np.concatenate(weights) * jacobian
        distinct = np.any(points != self.x, axis=-1)
        points, weights = points[distinct], weights[distinct]
        self.log(
            "debug",
            f"Solid rule level {level} on Ω_{self.r:g}({self.x.tolist()}): "
            f"{len(points)} nodes",
        )
        return SolidRule(
            points=points,
            weights=weights,
            values=self.gamma.closed_form(self.x, points),
            horizontal=np.sum(self.gamma.horizontal_y(self.x, points) ** 2, axis=-1),
            level=level,
        )

    def integrate(
        self,
        integrand: Callable[[SolidRule], np.ndarray],
        what: str = "solid integral",
    ) -> Tuple[float, float]:
        """
        Refines the rule until ∫_{Ω_r(x)} integrand dy settles, to the relative
        tolerance of the quadrature measured against ∫|integrand| dy.
        """
        coarse = self.rule(0)
        scale = coarse.integrate(np.abs(integrand(coarse)))
        quad = replace(
            self.quad,
            abs_tol=max(self.quad.abs_tol, self.quad.rel_tol * scale),
        )

        def evaluate(level):
            rule = self.rule(level)
            return rule.integrate(integrand(rule))

        return refine_until(evaluate, quad, what=what)

    def area(self) -> Tuple[float, float]:
        return self.integrate(lambda rule: np.ones(len(rule.points)), what="area")


@dataclass
class DeficitFunctionals:
    q: float
    Q: float
    omega: float
    r: float
    alpha: float
    q_profile: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "alpha": self.alpha,
            "q_r": self.q,
            "Q_r": self.Q,
            "omega_r": self.omega,
            "q_profile": [list(p) for p in self.q_profile],
        }


def default_quadrature() -> QuadratureSpec:
    """Solid integrals to a tenth of the identity tolerance."""
    return QuadratureSpec(rel_tol=0.1 * IDENTITY_TOL, abs_tol=1e-12, max_levels=6)


def surface_quadrature() -> QuadratureSpec:
    return QuadratureSpec(
        rel_tol=0.25 * IDENTITY_TOL,
        abs_tol=1e-12,
        max_levels=SURFACE_LEVELS,
    )


class MeanValueOperators(LoggingMixin):
    """
    m_r, M_r and the deficit functionals around arbitrary poles. Level sets
    are cached per (x, r, mesh level) and solid rules per (x, r).

    m_r doubles the contour mesh, starting from ``mesh``, until two
    consecutive surface means agree and Richardson-extrapolates the last
    two; the polyline rule is second order in the mesh width.
    """

    logging_name = "hormander.potential"

    def __init__(
        self,
        gamma: GammaGrushin,
        alpha: float = 3.0,
        quad: QuadratureSpec = None,
        mesh: int = None,
        surface_quad: QuadratureSpec = None,
    ):
        # q = 3 for the Grushin plane, so α must exceed 2/(q−2) = 2
        if alpha <= 2:
            raise ValueError(f"The solid kernel needs α > 2, got {alpha}")
        self.gamma = gamma
        self.alpha = float(alpha)
        self.quad = quad or default_quadrature()
        self.surface_quad = surface_quad or surface_quadrature()
        self.mesh = mesh or settings.CONTOUR_MESH
        self._extractors: Dict[int, LevelSetExtractor] = {}
        self._level_sets: Dict[tuple, LevelSet] = {}
        self._solids: Dict[tuple, SolidIntegrator] = {}

    @staticmethod
    def _key(x, r) -> tuple:
        return (float(x[0]), float(x[1]), float(r))

    def negligible(self, x, r) -> bool:
        """Whether Ω_r(x) lies inside the surrogate ball of radius LIMIT_RADIUS."""
        x = np.asarray(x, dtype=float)
        return outer_radius(self.gamma, x, 1.0 / r) < LIMIT_RADIUS

    def extractor(self, level: int = 0) -> LevelSetExtractor:
        if level not in self._extractors:
            mesh = self.mesh * 2**level
            self._extractors[level] = LevelSetExtractor(self.gamma, mesh)
        return self._extractors[level]

    def level_set(self, x, r, level: int = 0) -> LevelSet:
        key = (*self._key(x, r), level)
        if key not in self._level_sets:
            self._level_sets[key] = self.extractor(level).extract(x, r)
        return self._level_sets[key]

    def solid(self, x, r) -> SolidIntegrator:
        key = self._key(x, r)
        if key not in self._solids:
            self._solids[key] = SolidIntegrator(self.gamma, x, r, self.quad)
        return self._solids[key]

    # operators

    def m_r(self, u: FunctionLike, x, r) -> float:
        u = sample_function(u)
        if self.negligible(x, r):
            return float(u(np.asarray(x, dtype=float)))
        coarse = self.level_set(x, r)
        scale = surface_mean(self.gamma, coarse, lambda p: np.abs(u(p)))
        quad = replace(
            self.surface_quad,
            abs_tol=max(self.surface_quad.abs_tol, self.surface_quad.rel_tol * scale),
        )

        def evaluate(level):
            return surface_mean(self.gamma, self.level_set(x, r, level), u)

        value, _ = refine_until(evaluate, quad, what="surface mean", order=2)
        return value

    def M_r(self, u: FunctionLike, x, r) -> float:
        u = sample_function(u)
        if self.negligible(x, r):
            return float(u(np.asarray(x, dtype=float)))
        alpha = self.alpha
        value, _ = self.solid(x, r).integrate(
            lambda rule: u(rule.points) * rule.horizontal / rule.values ** (2 + alpha),
            what="solid mean",
        )
        return (alpha + 1) / r ** (alpha + 1) * value

    def M_r_coarea(self, u: FunctionLike, x, r, nodes: int = 12) -> float:
        """M_r recomputed as (α+1)/r^(α+1) ∫₀^r ρ^α m_ρ(u) dρ."""
        u = sample_function(u)
        rho, w = gauss_legendre(nodes, 0.0, r)
        means = np.array([self.m_r(u, x, p) for p in rho])
        alpha = self.alpha
        return float((alpha + 1) / r ** (alpha + 1) * np.sum(w * rho**alpha * means))

    def q_r(self, x, r) -> float:
        if self.negligible(x, r):
            return 0.0
        level = 1.0 / r
        value, _ = self.solid(x, r).integrate(
            lambda rule: rule.values - level,
            what="q_r",
        )
        return value

    def deficit_functionals(self, x, r, steps: int = 32) -> DeficitFunctionals:
        alpha = self.alpha
        q = self.q_r(x, r)
        omega = 0.0
        if not self.negligible(x, r):
            omega, _ = self.solid(x, r).integrate(
                lambda rule: r**alpha - rule.values ** (-alpha),
                what="ω_r",
            )
            omega /= alpha * r ** (alpha + 1)

        radii = r * np.arange(1, steps + 1) / steps
        profile = [(0.0, 0.0)] + [(float(p), self.q_r(x, p)) for p in radii[:-1]]
        profile.append((float(r), q))
        grid = np.array([p for p, _ in profile])
        values = np.array([p**alpha * v for p, v in profile])
        Q = (alpha + 1) / r ** (alpha + 1) * float(integrate.trapezoid(values, grid))
        self.log("debug", f"q_r = {q:.8g}, Q_r = {Q:.8g}, ω_r = {omega:.8g} at r = {r}")
        return DeficitFunctionals(q, Q, omega, float(r), alpha, profile)

    def a8_integral(self, x, k: float) -> float:
        """∫_{Ω_{1/k}(x)} Γ_x·K^α_x dy."""
        if self.negligible(x, 1.0 / k):
            return 0.0
        alpha = self.alpha
        value, _ = self.solid(x, 1.0 / k).integrate(
            lambda rule: rule.horizontal / rule.values ** (1 + alpha),
            what="Γ·K^α over Ω_{1/k}",
        )
        return value

    # checks

    def gauss_green(self, x, r) -> dict:
        """m_r(y₁²)(x) − x₁² against ∫_{Ω_r}(Γ_x − 1/r)·L(y₁²) dy = 2q_r."""
        x = np.asarray(x, dtype=float)
        lhs = self.m_r("y1^2", x, r) - x[0] ** 2
        rhs = 2 * self.q_r(x, r)
        return {
            "pole": x.tolist(),
            "r": r,
            "mean_minus_value": lhs,
            "two_q_r": rhs,
            "relative_residual": abs(lhs - rhs) / max(abs(rhs), 1e-300),
        }

    def inclusion_theta(self, x, r) -> float:
        """θ with Ω_r(x) ⊆ B(x, θ·r) in the surrogate metric."""
        return self.level_set(x, r).max_surrogate_distance() / r

    def kernel_minima(self, x, r) -> dict:
        level_set = self.level_set(x, r)
        surface = surface_kernel(self.gamma, np.asarray(x), level_set.vertices)
        rule = self.solid(x, r).rule(0)
        solid = rule.horizontal / rule.values ** (2 + self.alpha)
        return {"surface": float(np.min(surface)), "solid": float(np.min(solid))}


def fitted_doubling_constant(
    profile: VolumeProfile,
    x,
    radii: Sequence[float],
    nodes: int = 32,
) -> dict:
    """
    c = max_r r⁻² ∫_{B(x,r)} d(x,y)²/Λ(x, d(x,y)) dy over surrogate balls,
    at ``nodes`` and twice as many nodes per direction.
    """
    x = np.asarray(x, dtype=float)

    def integral(r, n):
        rho, w_rho = gauss_legendre(n, 0.0, r)
        left, left_w = gauss_legendre(n, -1.0, 0.0)
        right, right_w = gauss_legendre(n, 0.0, 1.0)
        u = np.concatenate([left, right])
        w_u = np.concatenate([left_w, right_w])
        lam = profile.lambda_array(x[None, :], rho)
        total = 0.0
        for sign in (1.0, -1.0):
            _, jacobian = surrogate_polar(x, rho[:, None], u[None, :], sign)
            values = (rho**2 / lam)[:, None] * jacobian
            total += float(w_rho @ values @ w_u)
        return total

    ratios = [integral(r, nodes) / r**2 for r in radii]
    refined = [integral(r, 2 * nodes) / r**2 for r in radii]
    c = max(ratios)
    c_refined = max(refined)
    return {
        "pole": x.tolist(),
        "radii": list(radii),
        "ratios": ratios,
        "c": c,
        "c_refined": c_refined,
        "stable": abs(c - c_refined) <= 0.2 * abs(c_refined),
    }


@dataclass
class MeanValueTable:
    rows: List[dict]
    monotone: List[dict]
    tolerance: float

    HEADER = (
        "pole_x1",
        "pole_x2",
        "r",
        "function",
        "u_x",
        "m_r",
        "M_r",
        "m_r_residual",
        "M_r_residual",
        "identity_ok",
        "sub_mean_ok",
    )

    @property
    def passed(self) -> bool:
        rows_ok = all(row["identity_ok"] and row["sub_mean_ok"] for row in self.rows)
        return rows_ok and all(m["nondecreasing"] for m in self.monotone)

    def csv_rows(self) -> List[list]:
        return [
            [
                row["pole"][0],
                row["pole"][1],
                row["r"],
                row["function"],
                row["u_x"],
                row["m_r"],
                row["M_r"],
                row["m_r"] - row["u_x"],
                row["M_r"] - row["u_x"],
                row["identity_ok"],
                row["sub_mean_ok"],
            ]
            for row in self.rows
        ]

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "rows": self.rows,
            "monotone": self.monotone,
        }


def _experiment(index, operators: MeanValueOperators, pole, r, names, tolerance):
    x = np.asarray(pole, dtype=float)
    rows = []
    for name in names:
        f = TEST_FUNCTIONS[name]
        value = float(f(x))
        m = operators.m_r(f, x, r)
        M = operators.M_r(f, x, r)
        slack = tolerance * f.scale(x)
        identity_ok = True
        if f.harmonic:
            identity_ok = abs(m - value) <= slack and abs(M - value) <= slack
        sub_mean_ok = True
        if f.subharmonic:
            sub_mean_ok = m >= value - slack and M >= value - slack and M <= m + slack
        rows.append(
            {
                "pole": x.tolist(),
                "r": float(r),
                "function": name,
                "u_x": value,
                "m_r": m,
                "M_r": M,
                "identity_ok": bool(identity_ok),
                "sub_mean_ok": bool(sub_mean_ok),
            },
        )
    return index, rows


def mean_value_table(
    operators: MeanValueOperators,
    poles: Sequence,
    radii: Sequence[float],
    functions: Sequence[str] = tuple(TEST_FUNCTIONS),
    tolerance: float = IDENTITY_TOL,
    n_jobs: int = 1,
    progress: bool = False,
) -> MeanValueTable:
    """
    Harmonic identities, sub-mean inequalities and monotonicity in r for
    every (pole, r, function).
    """
    for name in functions:
        sample_function(name)
    radii = sorted(float(r) for r in radii)
    pairs = [(p, r) for p in poles for r in radii]
    jobs = [(i, pole, r) for i, (pole, r) in enumerate(pairs)]
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_experiment)(i, operators, pole, r, functions, tolerance)
        for i, pole, r in tqdm(jobs, disable=not progress)
    )
    ordered = sorted(results, key=lambda item: item[0])
    rows = [row for _, block in ordered for row in block]

    monotone = []
    for pole in poles:
        pole = [float(v) for v in pole]
        for name in functions:
            f = TEST_FUNCTIONS[name]
            if f.harmonic or not f.subharmonic:
                continue
            series = [r for r in rows if r["pole"] == pole and r["function"] == name]
            slack = tolerance * f.scale(pole)
            m = [r["m_r"] for r in series]
            M = [r["M_r"] for r in series]
            monotone.append(
                {
                    "pole": pole,
                    "function": name,
                    "radii": [r["r"] for r in series],
                    "nondecreasing": all(b >= a - slack for a, b in zip(m, m[1:]))
                    and all(b >= a - slack for a, b in zip(M, M[1:])),
                },
            )
    table = MeanValueTable(rows, monotone, tolerance)
    logger.info(
        f"Mean-value table over {len(poles)} pole(s) and {len(radii)} level(s): "
        f"{'passed' if table.passed else 'FAILED'}",
    )
    return table
