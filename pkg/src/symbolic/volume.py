"""
The ball-volume polynomial Λ(x, ρ) = Σ_k f_k(x) ρ^k, where f_k is the sum of
|det| over n-tuples of basis brackets of total weight k.
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict
from typing import List
from typing import Sequence
from typing import Tuple

import numpy as np

from .dsl import SystemSpec
from .lie import HomogeneityViolationError
from .lie import LieBasis
from .lie import MultiIndex
from .poly import CompiledPolynomial
from .poly import Polynomial
from .poly import determinant

logger = logging.getLogger("hormander.volume")


@dataclass(frozen=True)
class DeterminantTerm:
    indices: Tuple[MultiIndex, ...]
    determinant: Polynomial

    @property
    def weight(self) -> int:
        return sum(i.weight for i in self.indices)


class VolumeProfile:
    def __init__(self, sigma: Sequence[int], terms: Dict[int, List[DeterminantTerm]]):
        self.sigma = tuple(sigma)
        self.terms = {k: list(v) for k, v in sorted(terms.items())}
        self._compiled = {
            k: CompiledPolynomial.from_polynomials([t.determinant for t in v])
            for k, v in self.terms.items()
        }

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def q(self) -> int:
        return sum(self.sigma)

    @property
    def degrees(self) -> List[int]:
        return list(self.terms)

    @property
    def f_q(self) -> Fraction:
        return sum(
            (abs(t.determinant.constant_term()) for t in self.terms.get(self.q, [])),
            Fraction(0),
        )

    def f(self, k: int, x: Sequence):
        """f_k(x), exact on rational points."""
        return sum(
            (abs(t.determinant.evaluate(list(x))) for t in self.terms.get(k, [])),
            Fraction(0) if _exact(x) else 0.0,
        )

    def f_array(self, k: int, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if k not in self._compiled:
            return np.zeros(points.shape[:-1])
        compiled = self._compiled[k]
        values = np.abs(compiled(points))
        return values if compiled.single else values.sum(axis=-1)

    def lambda_array(self, points, rho) -> np.ndarray:
        """Λ for arrays of points (..., n) and radii broadcasting against (...)."""
        points = np.asarray(points, dtype=float)
        rho = np.asarray(rho, dtype=float)
        total = np.zeros(np.broadcast(points[..., 0], rho).shape)
        for k in self.terms:
            total = total + self.f_array(k, points) * rho**k
        return total

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "f": {
                str(k): [
                    {
                        "indices": [i.to_list() for i in t.indices],
                        "determinant": t.determinant.render(),
                    }
                    for t in v
                ]
                for k, v in self.terms.items()
            },
            "f_q": str(self.f_q),
        }


def _exact(x) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in x)


def build_profile(spec: SystemSpec, basis: LieBasis) -> VolumeProfile:
    q = spec.q
    terms: Dict[int, List[DeterminantTerm]] = {}
    for combo in itertools.combinations(basis.elements, spec.n):
        indices = tuple(index for index, _ in combo)
        weight = sum(i.weight for i in indices)
        matrix = [list(f.coeffs) for _, f in combo]
        det = determinant(matrix)
        if det.is_zero():
            continue
        if weight > q:
            raise HomogeneityViolationError(
                f"Determinant of weight {weight} > q={q} does not vanish: {det}",
            )
        if not det.is_homogeneous(q - weight):
            raise HomogeneityViolationError(
                f"Determinant {det} is not δ-homogeneous of degree {q - weight}",
            )
        terms.setdefault(weight, []).append(DeterminantTerm(indices, det))

    profile = VolumeProfile(spec.sigma, terms)
    logger.debug(f"Volume profile with f_k for k in {profile.degrees}")
    return profile


def _check_rho(rho):
    if rho <= 0:
        raise ValueError(f"Radius must be positive, got {rho}")


def lambda_eval(profile: VolumeProfile, x: Sequence, rho):
    _check_rho(rho)
    return sum(
        (profile.f(k, x) * rho**k for k in profile.terms),
        Fraction(0) if _exact(list(x) + [rho]) else 0.0,
    )


def doubling_ratio(profile: VolumeProfile, x: Sequence, rho):
    _check_rho(rho)
    return lambda_eval(profile, x, 2 * rho) / lambda_eval(profile, x, rho)


def monotone_surrogate_ok(
    profile: VolumeProfile,
    x: Sequence,
    rhos: Sequence[float],
    beta: float,
) -> bool:
    """Whether ρ ↦ Λ(x, ρ)/ρ^(β−1) is nondecreasing along the sorted radii."""
    values = [float(lambda_eval(profile, x, r)) / r ** (beta - 1) for r in sorted(rhos)]
    return all(b >= a * (1 - 1e-12) for a, b in zip(values, values[1:]))


def sample_table(profile: VolumeProfile, points: Sequence[Sequence[float]]):
    """Rows (point..., k, f_k) for CSV export."""
    rows = []
    for point in points:
        for k in profile.terms:
            rows.append(list(point) + [k, float(profile.f(k, point))])
    return rows
