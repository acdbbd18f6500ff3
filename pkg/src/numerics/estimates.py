"""
Empirical checks of the two-sided estimates for the Grushin fundamental
solution. The structural constants of the estimates are unknown, so each
suite fits them on a sampled grid and gates on their stability instead of
on their value. The CC distance is replaced by the explicit surrogate and
the ball volume by the NSW polynomial Λ.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from dataclasses import field
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from hormander.loggers import LoggingMixin
from joblib import Parallel
from joblib import delayed
from symbolic.dsl import SystemSpec
from symbolic.lie import lie_basis
from symbolic.volume import VolumeProfile
from symbolic.volume import build_profile
from tqdm import tqdm

from .distance import grushin_distance_surrogate
from .distance import surrogate_polar
from .distance import surrogate_sphere
from .gamma import FD_STEP
from .gamma import GammaGrushin
from .gamma import render_word
from .quadrature import QuadratureSpec
from .quadrature import gauss_legendre
from .quadrature import refine_until
from .sampling import PairGrid
from .sampling import axis_pairs
from .sampling import dilate
from .sampling import normalized_grid
from .sampling import pole_sequence
from .sampling import product_sequence

logger = logging.getLogger("hormander.estimates")

STABILITY_GATE = 0.2
RATIO_GATE = 10.0
SCALING_GATE = 0.05
SLOPE_RANGE = (0.7, 1.3)
VARIATION_GATE = 3.0
PRODUCT_BAND = (0.25, 4.0)

# the normalized derivative sweep stops refining at this level
SWEEP_MAX_LEVEL = 3

LETTERS = (("x", 1), ("x", 2), ("y", 1), ("y", 2))

SUITES = ("upper", "lower", "pole", "deriv", "kernel")


@dataclass
class Gate:
    name: str
    value: float
    threshold: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "passed": bool(self.passed),
        }


def at_most(name: str, value: float, limit: float) -> Gate:
    passed = bool(np.isfinite(value) and value <= limit)
    return Gate(name, value, f"<= {limit:g}", passed)


def within(name: str, value: float, low: float, high: float) -> Gate:
    return Gate(name, value, f"in [{low:g}, {high:g}]", bool(low <= value <= high))


def relative_change(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


@dataclass
class EstimateReport:
    experiment: str
    constants: Dict[str, float]
    worst_ratio: float
    sample: dict
    gates: List[Gate]
    metrics: dict = field(default_factory=dict)
    header: Tuple[str, ...] = ("d", "gamma", "bound", "ratio")
    rows: List[list] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "status": self.status,
            "constants": self.constants,
            "worst_ratio": self.worst_ratio,
            "sample": self.sample,
            "gates": [g.to_dict() for g in self.gates],
            "metrics": self.metrics,
            "rows": len(self.rows),
        }


class BoundTemplate:
    """
    Right-hand sides of the estimates, evaluated with Λ(x, d) in place of
    the ball volume and the surrogate d in place of the CC distance:

    ``power``       d^(2−r)/Λ(x, d)
    ``log-upper``   d²/Λ(x, d)·log(R/d)
    ``log-lower``   log(R/d)
    ``fixed-pole``  log(1/d) if x₁ ≠ 0, else d²/Λ(x, d)
    """

    KINDS = ("power", "log-upper", "log-lower", "fixed-pole")

    def __init__(
        self,
        kind: str,
        profile: VolumeProfile,
        order: int = 0,
        R: Optional[float] = None,
        pole=None,
    ):
        if kind not in self.KINDS:
            raise ValueError(f"Unknown bound template {kind!r}")
        if kind in ("log-upper", "log-lower") and not R:
            raise ValueError(f"The {kind} template needs R")
        if kind == "fixed-pole" and pole is None:
            raise ValueError("The fixed-pole template needs a pole")
        self.kind = kind
        self.profile = profile
        self.order = order
        self.R = R
        self.pole = None if pole is None else np.asarray(pole, dtype=float)

    @property
    def logarithmic(self) -> bool:
        return self.kind == "fixed-pole" and self.pole[0] != 0

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        d = np.asarray(grushin_distance_surrogate(x, y))
        if self.kind == "log-lower":
            return np.log(self.R / d)
        if self.logarithmic:
            return np.log(1.0 / d)
        volume = self.profile.lambda_array(x, d)
        if self.kind == "power":
            return d ** (2 - self.order) / volume
        if self.kind == "log-upper":
            return d**2 / volume * np.log(self.R / d)
        return d**2 / volume

    def symmetry_ratio(self, x, y) -> float:
        """max over pairs of H(x,y)/H(y,x) and its inverse."""
        forward = self(x, y)
        backward = self(y, x)
        ratio = forward / backward
        return float(max(np.max(ratio), np.max(1.0 / ratio)))


def second_horizontal_x(gamma: GammaGrushin, xs, y, i: int, j: int) -> np.ndarray:
    """
    X_i X_j Γ(·; y) at the points xs, by central differences of the
    analytic X_jΓ with the steps of the finite-difference derivative path.
    """
    xs, y = np.broadcast_arrays(np.asarray(xs, dtype=float), np.asarray(y, dtype=float))
    d = np.asarray(grushin_distance_surrogate(xs, y))
    h = FD_STEP[2] * d
    if i == 2:
        h = h * (np.maximum(np.abs(xs[..., 0]), np.abs(y[..., 0])) + d)
    e = np.zeros(xs.shape)
    e[..., i - 1] = h
    plus = gamma.horizontal_x(xs + e, y)[..., j - 1]
    minus = gamma.horizontal_x(xs - e, y)[..., j - 1]
    difference = (plus - minus) / (2 * h)
    return difference if i == 1 else xs[..., 0] * difference


class EstimatesVerifier(LoggingMixin):
    logging_name = "hormander.estimates"

    def __init__(
        self,
        gamma: GammaGrushin,
        profile: VolumeProfile,
        n_jobs: int = 1,
        progress: bool = False,
    ):
        self.gamma = gamma
        self.profile = profile
        self.n_jobs = n_jobs
        self.progress = progress

    @classmethod
    def for_system(cls, spec: SystemSpec, gamma0: float = 1.0, **kwargs):
        gamma = GammaGrushin.for_system(spec, gamma0)
        return cls(gamma, build_profile(spec, lie_basis(spec)), **kwargs)

    def _sample(self, grid: PairGrid) -> dict:
        return {**grid.to_dict(), "gamma0": self.gamma.gamma0}

    # two-sided bounds

    def _fit(self, grid: PairGrid, template: BoundTemplate, largest: bool):
        x, y, d = grid.pairs()
        values = self.gamma.closed_form(x, y)
        bound = template(x, y)
        ratio = values / bound
        constant = float(np.max(ratio) if largest else np.min(ratio))
        rows = [list(r) for r in zip(d, values, bound, ratio)]
        return constant, rows, (x, y)

    def verify_upper_n2(self, grid: PairGrid) -> EstimateReport:
        """Smallest C₀ with Γ ≤ C₀·d²/Λ·log(R₀/d) on the grid."""
        self.start_run("upper")
        R0 = 2 * grid.d_max
        template = BoundTemplate("log-upper", self.profile, R=R0)
        c0, rows, (x, y) = self._fit(grid, template, largest=True)
        c0_refined, _, _ = self._fit(grid.refined(), template, largest=True)

        eps = np.logspace(-3, -0.5, 12)
        px, py = product_sequence(eps)
        product = self.gamma.closed_form(px, py) / template(px, py)
        band = product / np.median(product)

        ax, ay, _ = axis_pairs(
            max(grid.count // 10, 10),
            grid.d_min,
            grid.d_max,
            grid.seed,
        )
        axis = self.gamma.closed_form(ax, ay) / template(ax, ay)

        symmetry = template.symmetry_ratio(x, y)
        self.log("info", f"Upper bound: C0 = {c0:.6g} (refined {c0_refined:.6g})")
        return EstimateReport(
            experiment="upper",
            constants={"C0": c0, "C0_refined": c0_refined, "R0": R0},
            worst_ratio=c0,
            sample=self._sample(grid),
            gates=[
                at_most(
                    "C0 refinement change",
                    relative_change(c0, c0_refined),
                    STABILITY_GATE,
                ),
                within(
                    "product sequence min/median",
                    float(np.min(band)),
                    *PRODUCT_BAND,
                ),
                within(
                    "product sequence max/median",
                    float(np.max(band)),
                    *PRODUCT_BAND,
                ),
                Gate(
                    "axis pairs max ratio",
                    float(np.max(axis)),
                    "finite",
                    bool(np.all(np.isfinite(axis))),
                ),
                at_most("template symmetry H(x,y)/H(y,x)", symmetry, RATIO_GATE),
            ],
            metrics={
                "product_sequence": [
                    {"epsilon": float(e), "ratio": float(r)}
                    for e, r in zip(eps, product)
                ],
                "axis_max_ratio": float(np.max(axis)),
                "template_symmetry": symmetry,
            },
            rows=rows,
        )

    def verify_lower_n2(self, grid: PairGrid) -> EstimateReport:
        """Largest C₁ with Γ ≥ C₁·log(R₁/d) on the grid, R₁ beyond the largest d."""
        self.start_run("lower")
        R1 = 2 * grid.d_max
        template = BoundTemplate("log-lower", self.profile, R=R1)
        c1, rows, _ = self._fit(grid, template, largest=False)
        c1_refined, _, _ = self._fit(grid.refined(), template, largest=False)

        radii = np.logspace(-2, -8, 7)
        off_axis = self._radial(np.array([1.0, 0.0]), radii, lambda d: np.log(1.0 / d))
        on_axis = self._radial(np.array([0.0, 0.0]), radii, lambda d: 1.0 / d)

        width = min(grid.box[1] - grid.box[0], grid.box[3] - grid.box[2])
        far = PairGrid(
            grid.box,
            max(grid.count // 10, 10),
            width / 4,
            width / 2,
            grid.seed,
        )
        fx, fy, _ = far.pairs()
        far_min = float(np.min(self.gamma.closed_form(fx, fy)))

        ray = np.logspace(0, 3, 10)
        profile = self.gamma.decay_profile([1.0, 0.0], [1.0, 1.0], ray)
        decay = [v for _, v, _ in profile]
        derivative_decay = [g for _, _, g in profile]

        self.log("info", f"Lower bound: C1 = {c1:.6g} (refined {c1_refined:.6g})")
        return EstimateReport(
            experiment="lower",
            constants={"C1": c1, "C1_refined": c1_refined, "R1": R1},
            worst_ratio=c1,
            sample=self._sample(grid),
            gates=[
                Gate("C1 positive", c1, "> 0", c1 > 0),
                at_most(
                    "C1 refinement change",
                    relative_change(c1, c1_refined),
                    STABILITY_GATE,
                ),
                Gate(
                    "Γ/log(1/d) limit at (1, 0)",
                    off_axis[-1],
                    "> 0",
                    off_axis[-1] > 0,
                ),
                at_most(
                    "Γ/log(1/d) settling at (1, 0)",
                    relative_change(off_axis[-2], off_axis[-1]),
                    0.1,
                ),
                Gate("Γ·d limit at (0, 0)", on_axis[-1], "> 0", on_axis[-1] > 0),
                at_most(
                    "Γ·d settling at (0, 0)",
                    relative_change(on_axis[-2], on_axis[-1]),
                    1e-6,
                ),
                Gate("far pairs min Γ", far_min, "> 0", far_min > 0),
                Gate(
                    "Γ decays along a ray",
                    decay[-1] / decay[0],
                    "nonincreasing, < 0.1",
                    all(b <= a for a, b in zip(decay, decay[1:]))
                    and decay[-1] < 0.1 * decay[0],
                ),
                Gate(
                    "|X1Γ| decays along a ray",
                    derivative_decay[-1] / derivative_decay[0],
                    "< 0.1",
                    derivative_decay[-1] < 0.1 * derivative_decay[0],
                ),
            ],
            metrics={
                "radii": radii.tolist(),
                "ratio_log_at_1_0": off_axis,
                "gamma_times_d_at_0_0": on_axis,
                "far_min_gamma": far_min,
                "decay": [list(p) for p in profile],
            },
            rows=rows,
        )

    def _radial(self, pole, radii, scale) -> List[float]:
        """Γ(pole; y)/F(d) along the direction y₁ = pole₁ + d."""
        ys = pole + np.stack([radii, np.zeros_like(radii)], axis=-1)
        return (self.gamma.closed_form(pole, ys) / scale(radii)).tolist()

    # fixed pole

    def _pole_ratios(self, pole, radii, directions):
        ys, _ = pole_sequence(pole, radii, directions)
        template = BoundTemplate("fixed-pole", self.profile, pole=pole)
        values = self.gamma.closed_form(pole, ys)
        bound = template(pole, ys)
        d = np.asarray(grushin_distance_surrogate(pole, ys))
        return d, values, bound, values / bound

    def verify_fixed_pole(
        self,
        pole,
        d_min: float = 1e-5,
        epsilon: Optional[float] = None,
        count: int = 12,
        directions: int = 8,
    ) -> EstimateReport:
        """γ₁ ≤ Γ(x;y)/F(x,y) ≤ γ₂ for y → x with d ∈ [d_min, ε(x)]."""
        self.start_run("pole")
        pole = np.asarray(pole, dtype=float)
        logarithmic = pole[0] != 0
        if epsilon is None:
            epsilon = 0.1 if logarithmic else 0.5
        radii = np.logspace(math.log10(d_min), math.log10(epsilon), count)
        d, values, bound, ratio = self._pole_ratios(pole, radii, directions)
        g1, g2 = float(np.min(ratio)), float(np.max(ratio))

        half = self._pole_ratios(pole, radii[radii <= epsilon / 2], directions)[3]
        sensitivity = float(np.max(half) / np.min(half)) if len(half) else None

        gates = [
            Gate("γ1 positive", g1, "> 0", g1 > 0),
            at_most("γ2/γ1", g2 / g1, RATIO_GATE),
        ]
        metrics = {
            "F": "log(1/d)" if logarithmic else "d^2/Lambda",
            "epsilon": epsilon,
            "ratio_at_half_epsilon": sensitivity,
        }
        if not logarithmic:
            lam = 2.0
            scaled_pole = dilate(pole, lam)
            ys, _ = pole_sequence(pole, radii, directions)
            scaled = dilate(ys, lam)
            template = BoundTemplate("fixed-pole", self.profile, pole=scaled_pole)
            rescaled = self.gamma.closed_form(scaled_pole, scaled)
            rescaled = rescaled / template(scaled_pole, scaled)
            change = float(np.max(np.abs(rescaled - ratio) / ratio))
            gates.append(at_most("δ_λ rescaled ratio change", change, SCALING_GATE))
            metrics["scaling_lambda"] = lam
            metrics["scaling_change"] = change

        self.log("info", f"Fixed pole {pole.tolist()}: γ1 = {g1:.6g}, γ2 = {g2:.6g}")
        return EstimateReport(
            experiment="pole",
            constants={"gamma1": g1, "gamma2": g2, "ratio": g2 / g1},
            worst_ratio=g2 / g1,
            sample={
                "pole": pole.tolist(),
                "d_min": d_min,
                "epsilon": epsilon,
                "count": count,
                "directions": directions,
                "gamma0": self.gamma.gamma0,
            },
            gates=gates,
            metrics=metrics,
            rows=[list(r) for r in zip(d, values, bound, ratio)],
        )

    # derivatives

    def _derivative_ratios(self, x, y, order: int) -> np.ndarray:
        """|ZΓ|·Λ(x,d)/d^(2−r) for every pair and every word Z of length r."""
        words = list(itertools.product(LETTERS, repeat=order))
        template = BoundTemplate("power", self.profile, order=order)
        bound = template(x, y)

        def one(k):
            return [
                abs(self.gamma.derivative_finite_difference(x[k], y[k], w)) / bound[k]
                for w in words
            ]

        rows = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(one)(k) for k in tqdm(range(len(x)), disable=not self.progress)
        )
        return np.array(rows)

    def lagrange_oracle(self, x0s, ys, shrink: float = 0.1, count: int = 16) -> float:
        """
        Largest κ with |f(x) − f(x₀)| = κ·√m·d̂(x, x₀)·sup_B |Xf| for
        f = Γ(·;y) on surrogate balls B(x₀, ρ) with ρ = shrink·d̂(x₀, y).
        Lagrange's theorem bounds κ by the equivalence constant of d̂.
        """
        kappa = 0.0
        for x0, y in zip(x0s, ys):
            rho = shrink * grushin_distance_surrogate(x0, y)
            ball = np.concatenate(
                [x0[None, :]]
                + [
                    surrogate_sphere(x0, t * rho, count)
                    for t in (0.25, 0.5, 0.75, 1.0)
                ],
            )
            gradient = self.gamma.horizontal_x(ball, y)
            sup = float(np.max(np.linalg.norm(gradient, axis=-1)))
            boundary = surrogate_sphere(x0, rho, count)
            center = self.gamma.closed_form(x0, y)
            change = np.abs(self.gamma.closed_form(boundary, y) - center)
            kappa = max(kappa, float(np.max(change)) / (math.sqrt(2) * rho * sup))
        return kappa

    def derivative_sweep(self, order: int, max_level: int = SWEEP_MAX_LEVEL):
        """
        Maxima of the derivative ratio field over the nested normalized grids,
        refined until two consecutive maxima agree within the stability gate.
        The field is invariant under the maps that reduce every pair to the
        grid, so the maxima increase to its supremum.
        """
        sweep = []
        for level in range(max_level + 1):
            x, y = normalized_grid(level)
            peak = float(np.max(self._derivative_ratios(x, y, order)))
            sweep.append({"level": level, "pairs": len(x), "max": peak})
            self.log("debug", f"Derivative sweep level {level}: max {peak:.6g}")
            if level and relative_change(sweep[-2]["max"], peak) <= STABILITY_GATE:
                break
        return sweep

    def verify_derivative_bounds(self, grid: PairGrid, order: int) -> EstimateReport:
        """Smallest C with |Z₁⋯Z_rΓ| ≤ C·d^(2−r)/Λ over all words of length r."""
        if order not in (1, 2, 3):
            raise ValueError(f"Derivative order must be 1, 2 or 3, got {order}")
        self.start_run("deriv")
        x, y, d = grid.pairs()
        ratios = self._derivative_ratios(x, y, order)
        c = float(np.max(ratios))
        sweep = self.derivative_sweep(order)
        c_sweep = sweep[-1]["max"]
        c_coarse = sweep[-2]["max"]

        lam = 2.0
        scaled = self._derivative_ratios(dilate(x, lam), dilate(y, lam), order)
        scaling = float(np.max(np.abs(scaled - ratios) / np.maximum(ratios, 1e-300)))

        words = list(itertools.product(LETTERS, repeat=order))
        worst = np.unravel_index(np.argmax(ratios), ratios.shape)
        gates = [
            Gate("C finite", c, "finite", bool(np.isfinite(c))),
            at_most(
                "C sweep refinement change",
                relative_change(c_coarse, c_sweep),
                STABILITY_GATE,
            ),
            at_most("sampled C over sweep C", c / c_sweep, 1 + STABILITY_GATE),
            at_most("δ_λ ratio field change", scaling, SCALING_GATE),
        ]
        metrics = {
            "words": len(words),
            "worst_word": render_word(words[worst[1]]),
            "worst_pair": [x[worst[0]].tolist(), y[worst[0]].tolist()],
            "scaling_lambda": lam,
            "scaling_change": scaling,
            "sweep": sweep,
        }
        if order == 1:
            subset = slice(0, min(20, len(x)))
            kappa = self.lagrange_oracle(x[subset], y[subset])
            gates.append(at_most("Lagrange oracle κ", kappa, RATIO_GATE))
            metrics["lagrange_kappa"] = kappa

        self.log(
            "info",
            f"Derivative bound r={order}: C = {c:.6g} (sweep {c_sweep:.6g})",
        )
        per_pair = ratios.max(axis=1)
        return EstimateReport(
            experiment=f"deriv{order}",
            constants={"C": c, "C_sweep": c_sweep, "C_sweep_coarse": c_coarse},
            worst_ratio=c,
            sample={**self._sample(grid), "order": order},
            gates=gates,
            metrics=metrics,
            header=("d", "max_word_ratio"),
            rows=[[float(a), float(b)] for a, b in zip(d, per_pair)],
        )

    # singular kernel

    def _annulus(self, z, r, R, i, j, level):
        decades = max(1, int(round(math.log10(R / r))))
        s, ws = gauss_legendre(16 * decades * 2**level, math.log(r), math.log(R))
        left, left_w = gauss_legendre(32 * 2**level, -1.0, 0.0)
        right, right_w = gauss_legendre(32 * 2**level, 0.0, 1.0)
        u = np.concatenate([left, right])
        wu = np.concatenate([left_w, right_w])
        rho = np.exp(s)
        points, weights = [], []
        for sign in (1.0, -1.0):
            y, jacobian = surrogate_polar(z, rho[:, None], u[None, :], sign)
            points.append(y.reshape(-1, 2))
            weights.append(((ws * rho)[:, None] * wu[None, :] * jacobian).ravel())
        points = np.concatenate(points)
        weights = np.concatenate(weights)
        k = second_horizontal_x(self.gamma, z, points, i, j)
        return points, weights, k

    def singular_cancellation(
        self,
        pole=(1.0, 0.0),
        r: float = 1e-5,
        ratios: Sequence[float] = (10.0, 100.0, 1000.0),
        i: int = 1,
        j: int = 1,
        quad: QuadratureSpec = None,
    ) -> EstimateReport:
        """
        |∫_{r<d<R} k(z,y) dy| stays bounded while ∫|k| grows like log(R/r),
        for k(x,y) = X_i^x X_j^x Γ(x;y).
        """
        self.start_run("kernel")
        z = np.asarray(pole, dtype=float)
        quad = quad or QuadratureSpec(rel_tol=1e-3, abs_tol=1e-12, max_levels=3)
        signed, absolute = [], []
        for ratio in ratios:
            R = r * ratio

            last = {}

            def evaluate(level, R=R, last=last):
                _, weights, k = self._annulus(z, r, R, i, j, level)
                last["signed"] = abs(float(np.sum(k * weights)))
                return float(np.sum(np.abs(k) * weights))

            total, _ = refine_until(evaluate, quad, what=f"∫|k| over r<d<{R:g}")
            signed.append(last["signed"])
            absolute.append(total)

        slope = float(np.polyfit(np.log(np.log(ratios)), np.log(absolute), 1)[0])
        floor = max(signed[0], 1e-2 * absolute[0])
        variation = max(signed) / floor

        points, _, k = self._annulus(z, r, r * ratios[-1], i, j, 0)
        reverse = second_horizontal_x(self.gamma, points, z, i, j)
        d = np.asarray(grushin_distance_surrogate(z, points))
        volume = self.profile.lambda_array(z, d)
        A = float(np.max((np.abs(k) + np.abs(reverse)) * volume))

        self.log(
            "info",
            f"Singular kernel at {z.tolist()}: slope {slope:.3f}, A = {A:.6g}",
        )
        return EstimateReport(
            experiment="kernel",
            constants={"A": A, "slope": slope, "variation": variation},
            worst_ratio=variation,
            sample={
                "pole": z.tolist(),
                "r": r,
                "R_over_r": list(ratios),
                "i": i,
                "j": j,
                "gamma0": self.gamma.gamma0,
            },
            gates=[
                at_most("|∫k| variation", variation, VARIATION_GATE),
                within("∫|k| log-log slope", slope, *SLOPE_RANGE),
                Gate("A finite", A, "finite", bool(np.isfinite(A))),
            ],
            metrics={"signed": signed, "absolute": absolute},
            header=("R_over_r", "abs_integral_k", "integral_abs_k"),
            rows=[[float(a), b, c] for a, b, c in zip(ratios, signed, absolute)],
        )
