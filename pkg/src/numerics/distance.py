"""
Carnot–Carathéodory distance: the explicit two-sided surrogate for the
Grushin plane and a numerical upper bound for any homogeneous system.

The upper bound searches piecewise-constant controls a(t) with
γ' = Σ a_j X_j(γ), γ(0) = x, γ(1) = y and reports the smallest control size
r it can certify. It never returns a value below d_X(x, y) beyond the
endpoint tolerance.
"""
import logging
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import List
from typing import Optional

import numpy as np
from django.conf import settings
from hormander.loggers import LoggingMixin
from joblib import Parallel
from joblib import delayed
from scipy import optimize
from symbolic.dsl import SystemSpec
from symbolic.lifting import combination
from symbolic.lifting import flow_map
from symbolic.poly import CompiledPolynomial
from symbolic.poly import Context
from symbolic.poly import Polynomial
from tqdm import tqdm

logger = logging.getLogger("hormander.distance")


class InfeasiblePathError(Exception):
    def __init__(self, message, endpoint_error=None):
        super().__init__(message)
        self.endpoint_error = endpoint_error


def hom_norm(weights, x):
    """S(x) = Σ |x_i|^(1/σ_i), positively homogeneous of degree 1."""
    x = np.abs(np.asarray(x, dtype=float))
    exponents = 1.0 / np.asarray(weights, dtype=float)
    value = np.sum(x**exponents, axis=-1)
    return float(value) if np.ndim(value) == 0 else value


def grushin_distance_surrogate(x, y):
    """|x₁−y₁| + √(x₁² + |x₂−y₂|) − |x₁|, comparable to d_X on the Grushin plane."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.abs(x[..., 0])
    gap = np.abs(x[..., 1] - y[..., 1])
    root = np.sqrt(a * a + gap)
    denominator = root + a
    positive = denominator > 0
    vertical = np.where(positive, gap / np.where(positive, denominator, 1), 0)
    value = np.abs(x[..., 0] - y[..., 0]) + vertical
    return float(value) if np.ndim(value) == 0 else value


def surrogate_polar(x, rho, u, sign):
    """
    Polar coordinates of the surrogate metric around x: y₁ = x₁ + ρu and
    y₂ = x₂ ± t(t + 2|x₁|) with t = ρ(1−|u|), u ∈ [−1, 1]. The point lies at
    surrogate distance exactly ρ from x. Returns the points and the Jacobian
    |∂y/∂(ρ, u)| = 2ρ(t + |x₁|).
    """
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    a = abs(float(x[0]))
    t = rho * (1.0 - np.abs(u))
    y1 = x[0] + rho * u
    y2 = x[1] + np.asarray(sign, dtype=float) * t * (t + 2 * a)
    points = np.stack(np.broadcast_arrays(y1, y2), axis=-1)
    return points, 2 * rho * (t + a)


def surrogate_sphere(x, rho: float, count: int = 64):
    """Points at surrogate distance exactly ρ from x, shape (2·count, 2)."""
    u = np.linspace(-1.0, 1.0, count)
    upper, _ = surrogate_polar(x, rho, u, 1.0)
    lower, _ = surrogate_polar(x, rho, u, -1.0)
    return np.concatenate([upper, lower])


@dataclass(frozen=True)
class DistanceOptions:
    segments: int = 16
    restarts: int = 8
    budget: int = 4000
    integrator: str = "flow"
    rk4_steps: int = 64
    control_norm: str = "sup"
    tolerance: float = 1e-6
    drift: bool = False
    seed: int = 0
    n_jobs: int = 1

    @classmethod
    def from_settings(cls, **overrides) -> "DistanceOptions":
        options = cls(
            segments=settings.DISTANCE_SEGMENTS,
            restarts=settings.DISTANCE_RESTARTS,
            budget=settings.DISTANCE_BUDGET,
            seed=settings.SEED,
            n_jobs=settings.THREADS,
        )
        return replace(options, **{k: v for k, v in overrides.items() if v is not None})

    def __post_init__(self):
        if self.integrator not in ("flow", "rk4"):
            raise ValueError(f"Unknown integrator {self.integrator!r}")
        if self.control_norm not in ("sup", "euclidean"):
            raise ValueError(f"Unknown control norm {self.control_norm!r}")
        if self.segments < 1 or self.restarts < 1:
            raise ValueError("Segments and restarts must be positive")


@dataclass
class ControlPath:
    controls: np.ndarray
    drift_controls: Optional[np.ndarray] = None
    control_norm: str = "sup"

    @property
    def segments(self) -> int:
        return self.controls.shape[0]

    @property
    def r(self) -> float:
        if self.control_norm == "sup":
            size = float(np.max(np.abs(self.controls)))
        else:
            size = float(np.max(np.linalg.norm(self.controls, axis=1)))
        if self.drift_controls is not None and len(self.drift_controls):
            size = max(size, float(np.sqrt(np.max(np.abs(self.drift_controls)))))
        return size

    def rows(self) -> List[list]:
        rows = []
        for k in range(self.segments):
            row = [k, k / self.segments, (k + 1) / self.segments]
            row += [float(v) for v in self.controls[k]]
            if self.drift_controls is not None:
                row.append(float(self.drift_controls[k]))
            rows.append(row)
        return rows

    def header(self) -> List[str]:
        m = self.controls.shape[1]
        header = ["segment", "t_start", "t_end"] + [f"a{j + 1}" for j in range(m)]
        if self.drift_controls is not None:
            header.append("a0")
        return header


@dataclass
class DistanceResult:
    r: float
    endpoint_error: float
    path: ControlPath
    restarts: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "r_hat": self.r,
            "endpoint_error": self.endpoint_error,
            "segments": self.path.segments,
            "control_norm": self.path.control_norm,
            "restarts": self.restarts,
        }


def _control_context(spec: SystemSpec, drift: bool) -> Context:
    pairs = [(f"a{j}", 1) for j in range(1, spec.m + 1)]
    if drift:
        pairs.append(("a0", 2))
    return spec.context.extend(Context.from_pairs(pairs))


class DistanceOptimizer(LoggingMixin):
    """Upper bounds for d_X by optimization over piecewise-constant controls."""

    logging_name = "hormander.distance"

    def __init__(self, spec: SystemSpec, options: DistanceOptions = None):
        self.spec = spec
        self.options = options or DistanceOptions()
        if self.options.drift and spec.drift is None:
            raise ValueError("Drift controls need a system with a drift")
        self.use_drift = self.options.drift
        context = _control_context(spec, self.use_drift)
        controls = [Polynomial.variable(context, f"a{j}") for j in range(1, spec.m + 1)]
        fields = list(spec.fields)
        if self.use_drift:
            controls.append(Polynomial.variable(context, "a0"))
            fields.append(spec.drift)
        combined = combination(fields, controls, context)
        self._flow = CompiledPolynomial.from_polynomials(
            flow_map(combined, spec.sigma[-1] + 1),
        )
        self._fields = CompiledPolynomial.from_polynomials(
            [c for f in fields for c in f.coeffs],
        )
        self.width = len(fields)

    # integration

    def _velocity(self, z, a):
        matrix = self._fields(z).reshape(self.width, self.spec.n)
        return a @ matrix

    def endpoint(self, x, controls: np.ndarray) -> np.ndarray:
        """γ(1) for controls of shape (M, width)."""
        z = np.asarray(x, dtype=float)
        M = controls.shape[0]
        if self.options.integrator == "flow":
            for a in controls:
                z = np.atleast_1d(self._flow(np.concatenate([z, a / M])))
            return z
        steps = max(1, self.options.rk4_steps // M)
        h = 1.0 / (M * steps)
        for a in controls:
            for _ in range(steps):
                k1 = self._velocity(z, a)
                k2 = self._velocity(z + 0.5 * h * k1, a)
                k3 = self._velocity(z + 0.5 * h * k2, a)
                k4 = self._velocity(z + h * k3, a)
                z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return z

    def _path(self, flat: np.ndarray) -> ControlPath:
        controls = flat.reshape(self.options.segments, self.width)
        if self.use_drift:
            return ControlPath(
                controls[:, :-1],
                controls[:, -1],
                self.options.control_norm,
            )
        return ControlPath(controls, None, self.options.control_norm)

    def _size(self, flat: np.ndarray) -> float:
        return self._path(flat).r

    # optimization

    def _initial(self, x, y, restart: int, scale: float) -> np.ndarray:
        M = self.options.segments
        if restart == 0:
            matrix = self._fields(np.asarray(x, dtype=float))
            matrix = matrix.reshape(self.width, self.spec.n)
            a, *_ = np.linalg.lstsq(matrix.T, np.asarray(y) - np.asarray(x), rcond=None)
            return np.tile(a, M)
        rng = np.random.default_rng([self.options.seed, restart])
        return rng.normal(0.0, scale, size=M * self.width)

    def _restart(self, x, y, restart: int, scale: float) -> dict:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        tol = self.options.tolerance

        def error(flat):
            end = self.endpoint(x, flat.reshape(-1, self.width))
            return float(np.max(np.abs(end - y)))

        flat = self._initial(x, y, restart, scale)
        stages = 3
        for stage in range(stages):
            mu = 10.0 ** (2 + 2 * stage) / scale

            def penalised(v, mu=mu):
                miss = self.endpoint(x, v.reshape(-1, self.width)) - y
                return self._size(v) + mu * float(miss @ miss)

            result = optimize.minimize(
                penalised,
                flat,
                method="Nelder-Mead",
                options={
                    "maxfev": max(1, self.options.budget // stages),
                    "xatol": 1e-10,
                    "fatol": 1e-12,
                },
            )
            flat = result.x
            if error(flat) < tol:
                break

        polished = self._polish(x, y, flat)
        candidates = [flat] if polished is None else [polished, flat]
        feasible = [c for c in candidates if error(c) < tol]
        best = min(feasible, key=self._size) if feasible else candidates[0]
        return {
            "restart": restart,
            "r": self._size(best),
            "error": error(best),
            "feasible": bool(feasible),
            "controls": best,
        }

    def _polish(self, x, y, flat):
        """min r subject to γ(1) = y and the control bounds, by SLSQP."""
        width, norm = self.width, self.options.control_norm
        drift = self.use_drift

        def split(v):
            controls = v[:-1].reshape(-1, width)
            if drift:
                return controls[:, :-1], controls[:, -1], v[-1]
            return controls, None, v[-1]

        def bounds(v):
            controls, drift_controls, r = split(v)
            if norm == "sup":
                parts = [(r - controls).ravel(), (r + controls).ravel()]
            else:
                parts = [r * r - np.sum(controls * controls, axis=1)]
            if drift_controls is not None:
                parts.append(r * r - np.abs(drift_controls))
            return np.concatenate(parts)

        def reach(v):
            return self.endpoint(x, v[:-1].reshape(-1, width)) - y

        start = np.append(flat, self._size(flat))
        try:
            result = optimize.minimize(
                lambda v: v[-1],
                start,
                jac=lambda v: np.eye(len(v))[-1],
                method="SLSQP",
                constraints=[
                    {"type": "eq", "fun": reach},
                    {"type": "ineq", "fun": bounds},
                ],
                options={"maxiter": 200, "ftol": 1e-12},
            )
        except (ValueError, np.linalg.LinAlgError) as e:
            self.log("debug", f"SLSQP polish failed: {e}")
            return None
        return result.x[:-1]

    def upper_bound(self, x, y, progress: bool = False) -> DistanceResult:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.array_equal(x, y):
            raise ValueError("The distance upper bound needs two distinct points")
        self.start_run()
        scale = max(hom_norm(self.spec.sigma, y - x), 1e-3)
        self.log(
            "info",
            f"Bounding d({x.tolist()}, {y.tolist()}) with {self.options.restarts} "
            f"restarts of {self.options.segments} segments",
        )
        runs = Parallel(n_jobs=self.options.n_jobs)(
            delayed(self._restart)(x, y, k, scale)
            for k in tqdm(range(self.options.restarts), disable=not progress)
        )
        runs = sorted(runs, key=lambda run: run["restart"])
        summary = [
            {k: run[k] for k in ("restart", "r", "error", "feasible")} for run in runs
        ]
        feasible = [run for run in runs if run["feasible"]]
        if not feasible:
            best_error = min(run["error"] for run in runs)
            self.log(
                "warning",
                f"No restart reached the endpoint (best error {best_error:.3g})",
            )
            raise InfeasiblePathError(
                f"No control reached {y.tolist()} within {self.options.tolerance} "
                f"(best endpoint error {best_error:.3g})",
                endpoint_error=best_error,
            )
        best = min(feasible, key=lambda run: (run["r"], run["restart"]))
        self.log("debug", f"Best restart {best['restart']}: r = {best['r']:.8g}")
        return DistanceResult(
            r=best["r"],
            endpoint_error=best["error"],
            path=self._path(best["controls"]),
            restarts=summary,
        )


def distance_upper_bound(
    spec: SystemSpec,
    x,
    y,
    options: DistanceOptions = None,
) -> DistanceResult:
    return DistanceOptimizer(spec, options).upper_bound(x, y)
