"""
Seeded grids of point pairs for the estimate suites. Pairs are drawn at a
prescribed surrogate distance, so every grid covers its distance range on
a logarithmic scale.
"""
import logging
from dataclasses import dataclass
from dataclasses import replace
from typing import Tuple

import numpy as np

from .distance import surrogate_polar

logger = logging.getLogger("hormander.sampling")

MAX_DRAWS = 100


@dataclass(frozen=True)
class PairGrid:
    box: Tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    count: int = 1000
    d_min: float = 1e-3
    d_max: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("A pair grid needs at least one pair")
        if not 0 < self.d_min <= self.d_max:
            raise ValueError(f"Bad distance range [{self.d_min}, {self.d_max}]")
        if self.box[0] >= self.box[1] or self.box[2] >= self.box[3]:
            raise ValueError(f"Empty box {self.box}")

    def refined(self, factor: int = 4) -> "PairGrid":
        """The same box and range with ``factor`` times the pairs."""
        return replace(self, count=self.count * factor, seed=self.seed + 1)

    def _in_box(self, points) -> np.ndarray:
        return (
            (points[:, 0] >= self.box[0])
            & (points[:, 0] <= self.box[1])
            & (points[:, 1] >= self.box[2])
            & (points[:, 1] <= self.box[3])
        )

    def pairs(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, y, d) with x, y in the box and d the surrogate distance."""
        rng = np.random.default_rng(self.seed)
        xs, ys, ds = [], [], []
        missing = self.count
        for _ in range(MAX_DRAWS):
            if missing <= 0:
                break
            n = 2 * missing
            x = np.stack(
                [
                    rng.uniform(self.box[0], self.box[1], n),
                    rng.uniform(self.box[2], self.box[3], n),
                ],
                axis=-1,
            )
            rho = np.exp(rng.uniform(np.log(self.d_min), np.log(self.d_max), n))
            u = rng.uniform(-1.0, 1.0, n)
            sign = rng.choice([-1.0, 1.0], n)
            t = rho * (1.0 - np.abs(u))
            y = np.stack(
                [x[:, 0] + rho * u, x[:, 1] + sign * t * (t + 2 * np.abs(x[:, 0]))],
                axis=-1,
            )
            keep = np.flatnonzero(self._in_box(y))[:missing]
            xs.append(x[keep])
            ys.append(y[keep])
            ds.append(rho[keep])
            missing -= len(keep)
        if missing > 0:
            raise ValueError(
                f"Could not place {self.count} pairs at distances "
                f"[{self.d_min}, {self.d_max}] inside {self.box}",
            )
        logger.debug(f"Drew {self.count} pairs with seed {self.seed}")
        return np.concatenate(xs), np.concatenate(ys), np.concatenate(ds)

    def to_dict(self) -> dict:
        return {
            "box": list(self.box),
            "count": self.count,
            "d_min": self.d_min,
            "d_max": self.d_max,
            "seed": self.seed,
        }


def dilate(points, lam: float) -> np.ndarray:
    """δ_λ(x₁, x₂) = (λx₁, λ²x₂)."""
    points = np.asarray(points, dtype=float)
    return points * np.array([lam, lam * lam])


def axis_pairs(count: int, d_min: float = 1e-3, d_max: float = 1.0, seed: int = 0):
    """Pairs with x₁ = y₁ = 0, where the surrogate distance is √|x₂ − y₂|."""
    rng = np.random.default_rng(seed)
    d = np.exp(rng.uniform(np.log(d_min), np.log(d_max), count))
    x2 = rng.uniform(-1.0, 1.0, count)
    sign = rng.choice([-1.0, 1.0], count)
    x = np.stack([np.zeros(count), x2], axis=-1)
    y = np.stack([np.zeros(count), x2 + sign * d * d], axis=-1)
    return x, y, d


def normalized_grid(level: int, base: int = 8, a_range=(1e-3, 1e4)):
    """
    Pairs at surrogate distance 1 with x = (a, 0) and y on the upper half of
    the unit surrogate sphere around x, on an (a, u) grid: a = 0 and n + 1
    log-spaced values over ``a_range``, n + 1 equally spaced u in [−1, 1],
    n = base·2^level. The grid of a level contains the grids of all lower
    levels.

    A dilation, an x₂-translation and the reflections (x₁, y₁) ↦ (−x₁, −y₁)
    and (x₂, y₂) ↦ (−x₂, −y₂) map any pair of the Grushin plane onto one of
    these for some (a, u), a ≥ 0.
    """
    n = base * 2**level
    low, high = np.log10(a_range[0]), np.log10(a_range[1])
    a = np.concatenate([[0.0], np.logspace(low, high, n + 1)])
    u = np.linspace(-1.0, 1.0, n + 1)
    A, U = np.meshgrid(a, u, indexing="ij")
    t = 1.0 - np.abs(U)
    x = np.stack([A, np.zeros_like(A)], axis=-1).reshape(-1, 2)
    y = np.stack([A + U, t * (t + 2 * A)], axis=-1).reshape(-1, 2)
    return x, y


def product_sequence(epsilons) -> Tuple[np.ndarray, np.ndarray]:
    """x(ε) = (ε, 2ε⁴), y(ε) = (ε, ε⁴)."""
    eps = np.asarray(epsilons, dtype=float)
    x = np.stack([eps, 2 * eps**4], axis=-1)
    y = np.stack([eps, eps**4], axis=-1)
    return x, y


def pole_sequence(pole, radii, directions: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """Points y at each surrogate radius around the pole, spread over directions."""
    pole = np.asarray(pole, dtype=float)
    u = np.linspace(-1.0, 1.0, directions // 2 + 1)
    points, radius = [], []
    for sign in (1.0, -1.0):
        for rho in radii:
            y, _ = surrogate_polar(pole, rho, u, sign)
            points.append(y)
            radius.append(np.full(len(u), rho))
    return np.concatenate(points), np.concatenate(radius)
