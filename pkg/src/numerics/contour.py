"""
Level sets ∂Ω_r(x) = {y : Γ(x;y) = 1/r} by marching squares on a mesh
centred at the pole, with every crossing refined by bisection along its
mesh edge.
"""
import logging
from dataclasses import dataclass
from typing import Dict
from typing import List
from typing import Tuple

import numpy as np
from hormander.loggers import LoggingMixin

from .distance import grushin_distance_surrogate
from .distance import surrogate_sphere
from .gamma import GammaGrushin

logger = logging.getLogger("hormander.contour")

BISECTION_STEPS = 50

# corner k of a cell is cut off by the segment joining these two edges
CORNER_EDGES = {
    0: ("left", "bottom"),
    1: ("bottom", "right"),
    2: ("right", "top"),
    3: ("top", "left"),
}


class OpenContourError(Exception):
    pass


class DegenerateLevelError(Exception):
    pass


@dataclass
class LevelSet:
    pole: Tuple[float, float]
    r: float
    loops: List[np.ndarray]
    box: Tuple[float, float, float, float]
    mesh: int
    level_shift: float = 0.0

    @property
    def level(self) -> float:
        return 1.0 / self.r

    @property
    def vertices(self) -> np.ndarray:
        return np.concatenate(self.loops)

    @property
    def area(self) -> float:
        total = 0.0
        for loop in self.loops:
            nxt = np.roll(loop, -1, axis=0)
            cross = loop[:, 0] * nxt[:, 1] - nxt[:, 0] * loop[:, 1]
            total += 0.5 * float(np.sum(cross))
        return total

    @property
    def perimeter(self) -> float:
        return float(
            sum(
                np.sum(np.linalg.norm(np.roll(loop, -1, axis=0) - loop, axis=1))
                for loop in self.loops
            ),
        )

    def line_integral(self, values_of) -> float:
        """
        ∮ g dσ by the trapezoid rule on the polylines, with ``values_of``
        mapping an array of vertices to g at those vertices.
        """
        total = 0.0
        for loop in self.loops:
            g = values_of(loop)
            lengths = np.linalg.norm(np.roll(loop, -1, axis=0) - loop, axis=1)
            total += float(np.sum(lengths * 0.5 * (g + np.roll(g, -1))))
        return total

    def contains(self, points) -> np.ndarray:
        """Even-odd rule against all loops."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.zeros(len(points), dtype=bool)
        for loop in self.loops:
            a = loop
            b = np.roll(loop, -1, axis=0)
            px = points[:, None, 0]
            py = points[:, None, 1]
            straddles = (a[None, :, 1] > py) != (b[None, :, 1] > py)
            rise = np.where(b[:, 1] == a[:, 1], 1.0, b[:, 1] - a[:, 1])
            slope = (b[:, 0] - a[:, 0]) / rise
            crossing = a[None, :, 0] + (py - a[None, :, 1]) * slope[None, :]
            hits = straddles & (px < crossing)
            inside ^= (np.sum(hits, axis=1) % 2).astype(bool)
        return inside

    def max_surrogate_distance(self) -> float:
        return float(np.max(grushin_distance_surrogate(self.pole, self.vertices)))

    def to_dict(self) -> dict:
        return {
            "pole": list(self.pole),
            "r": self.r,
            "level": self.level,
            "loops": len(self.loops),
            "vertices": int(sum(len(loop) for loop in self.loops)),
            "area": self.area,
            "perimeter": self.perimeter,
            "box": list(self.box),
            "mesh": self.mesh,
            "level_shift": self.level_shift,
        }


def outer_radius(gamma: GammaGrushin, x, level: float) -> float:
    """
    A surrogate radius, within a factor 2 of the smallest, whose sphere sees
    Γ(x;·) ≤ level everywhere.
    """

    def peak(rho):
        return float(np.max(gamma.closed_form(x, surrogate_sphere(x, rho))))

    rho = 1.0
    while peak(rho) > level:
        rho *= 2
    while rho > 1e-12 and peak(rho / 2) <= level:
        rho /= 2
    return rho


def _cell_segments(inside: np.ndarray, center_inside: bool) -> List[Tuple[str, str]]:
    """Segments of one cell as pairs of edge names; corners counterclockwise."""
    crossed = sum(inside[k] != inside[(k + 1) % 4] for k in range(4))
    if crossed == 0:
        return []
    if crossed == 4:
        corners = [k for k in range(4) if inside[k] != center_inside]
        return [CORNER_EDGES[k] for k in corners]
    # two crossings: cut off the corner (or pair of corners) in the minority
    edges = []
    names = ("bottom", "right", "top", "left")
    for k in range(4):
        if inside[k] != inside[(k + 1) % 4]:
            edges.append(names[k])
    return [tuple(edges)]


class LevelSetExtractor(LoggingMixin):
    logging_name = "hormander.contour"

    def __init__(self, gamma: GammaGrushin, mesh: int = 160, enlargements: int = 4):
        self.gamma = gamma
        self.mesh = mesh + (mesh % 2)
        self.enlargements = enlargements

    def _outer_radius(self, x, level) -> float:
        return outer_radius(self.gamma, x, level)

    def _box(self, x, rho) -> Tuple[float, float, float, float]:
        sphere = surrogate_sphere(x, rho)
        w1 = 1.1 * float(np.max(np.abs(sphere[:, 0] - x[0])))
        w2 = 1.1 * float(np.max(np.abs(sphere[:, 1] - x[1])))
        return (x[0] - w1, x[0] + w1, x[1] - w2, x[1] + w2)

    def extract(self, x, r: float) -> LevelSet:
        if r <= 0:
            raise ValueError(f"Level parameter r must be positive, got {r}")
        try:
            return self._extract(x, r, 0.0)
        except DegenerateLevelError as e:
            shift = 1e-6 * r
            self.log(
                "info",
                f"Level 1/{r} is degenerate ({e}); retrying at r + {shift:.3g}",
            )
            return self._extract(x, r + shift, shift)

    def _extract(self, x, r, shift) -> LevelSet:
        self.start_run()
        x = np.asarray(x, dtype=float)
        level = 1.0 / r
        box = self._box(x, self._outer_radius(x, level))
        for attempt in range(self.enlargements + 1):
            grid = self._grid(x, box)
            values = self.gamma.closed_form(x, grid)
            inside = values > level
            border = np.concatenate(
                [inside[0], inside[-1], inside[:, 0], inside[:, -1]],
            )
            if not border.any():
                break
            self.log("debug", f"Contour touches the box {box}, enlarging")
            cx, cy = x
            box = (
                cx - 2 * (cx - box[0]),
                cx + 2 * (box[1] - cx),
                cy - 2 * (cy - box[2]),
                cy + 2 * (box[3] - cy),
            )
        else:
            raise OpenContourError(
                f"The level set Γ = {level:.6g} around {x.tolist()} is not closed "
                f"inside the largest box {box}",
            )

        loops = self._trace(x, grid, values, level)
        if sum(len(loop) for loop in loops) < 8:
            raise DegenerateLevelError(
                f"The mesh does not resolve the level {level:.6g}",
            )
        loops = [self._orient(x, loop) for loop in loops]
        self.log("debug", f"Extracted {len(loops)} loop(s) at level {level:.6g}")
        return LevelSet(tuple(x.tolist()), r, loops, box, self.mesh, shift)

    def _grid(self, x, box) -> np.ndarray:
        y1 = np.linspace(box[0], box[1], self.mesh)
        y2 = np.linspace(box[2], box[3], self.mesh)
        Y1, Y2 = np.meshgrid(y1, y2)
        return np.stack([Y1, Y2], axis=-1)

    def _refine(self, x, inner, outer, level: float) -> np.ndarray:
        lo = np.zeros(len(inner))
        hi = np.ones(len(inner))
        direction = outer - inner
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            above = self.gamma.closed_form(x, inner + mid[:, None] * direction) > level
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return inner + (0.5 * (lo + hi))[:, None] * direction

    def _trace(self, x, grid, values, level) -> List[np.ndarray]:
        inside = values > level
        corner_sum = (
            inside[:-1, :-1].astype(int)
            + inside[:-1, 1:]
            + inside[1:, 1:]
            + inside[1:, :-1]
        )
        cells = np.argwhere((corner_sum > 0) & (corner_sum < 4))

        def edge_key(i, j, name):
            return {
                "bottom": ("h", i, j),
                "top": ("h", i + 1, j),
                "left": ("v", i, j),
                "right": ("v", i, j + 1),
            }[name]

        segments: List[Tuple[tuple, tuple]] = []
        for i, j in cells:
            corners = np.array(
                [
                    inside[i, j],
                    inside[i, j + 1],
                    inside[i + 1, j + 1],
                    inside[i + 1, j],
                ],
            )
            center = None
            saddle = corners[0] == corners[2] and corners[1] == corners[3]
            if saddle and corners[0] != corners[1]:
                middle = 0.5 * (grid[i, j] + grid[i + 1, j + 1])
                center = bool(self.gamma.closed_form(x, middle) > level)
            for a, b in _cell_segments(corners, center):
                segments.append((edge_key(i, j, a), edge_key(i, j, b)))

        keys = sorted({k for s in segments for k in s})
        inner, outer = [], []
        for kind, i, j in keys:
            p, q = (i, j), ((i, j + 1) if kind == "h" else (i + 1, j))
            if inside[p]:
                inner.append(grid[p])
                outer.append(grid[q])
            else:
                inner.append(grid[q])
                outer.append(grid[p])
        points = []
        if keys:
            points = self._refine(x, np.array(inner), np.array(outer), level)
        location = {k: points[n] for n, k in enumerate(keys)}

        by_edge: Dict[tuple, List[int]] = {}
        for n, (a, b) in enumerate(segments):
            by_edge.setdefault(a, []).append(n)
            by_edge.setdefault(b, []).append(n)
        for key, users in by_edge.items():
            if len(users) != 2:
                raise OpenContourError(f"The contour ends on mesh edge {key}")

        used = [False] * len(segments)
        loops = []
        for start in range(len(segments)):
            if used[start]:
                continue
            used[start] = True
            first, current = segments[start]
            chain = [first]
            previous = start
            while current != first:
                chain.append(current)
                nxt = [s for s in by_edge[current] if s != previous][0]
                used[nxt] = True
                a, b = segments[nxt]
                current = b if a == current else a
                previous = nxt
            loops.append(np.array([location[k] for k in chain]))
        return loops

    def _orient(self, x, loop: np.ndarray) -> np.ndarray:
        """Counterclockwise around the superlevel set: Γ grows to the left."""
        tangent = np.roll(loop, -1, axis=0) - np.roll(loop, 1, axis=0)
        left = np.stack([-tangent[:, 1], tangent[:, 0]], axis=-1)
        gradient = self.gamma.gradient_y(x, loop)
        norms = np.linalg.norm(gradient, axis=1)
        if np.any(norms <= 1e-14 * np.max(norms)):
            raise DegenerateLevelError("The gradient of Γ vanishes on the level set")
        if np.sum(np.sum(gradient * left, axis=1)) < 0:
            return loop[::-1].copy()
        return loop


def extract_level_set(gamma: GammaGrushin, x, r: float, mesh: int = 160) -> LevelSet:
    return LevelSetExtractor(gamma, mesh).extract(x, r)
