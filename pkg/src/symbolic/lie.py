import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict
from typing import List
from typing import Sequence
from typing import Tuple

from . import linalg
from .dsl import SystemSpec
from .dsl import VectorField
from .dsl import coefficient_vectors
from .dsl import field_degree
from .poly import PolynomialContextError

logger = logging.getLogger("hormander.lie")

DRIFT_WEIGHT = 2


class InvalidMultiIndexError(ValueError):
    pass


class HomogeneityViolationError(Exception):
    pass


@dataclass(frozen=True)
class MultiIndex:
    """
    Entries over {0, 1, ..., m}; 0 stands for the drift, which weighs 2.
    """

    entries: Tuple[int, ...]

    def __post_init__(self):
        if not self.entries:
            raise InvalidMultiIndexError("A multi-index needs at least one entry")
        if any(not isinstance(i, int) or i < 0 for i in self.entries):
            raise InvalidMultiIndexError(f"Invalid entries {self.entries}")

    @property
    def weight(self) -> int:
        return sum(DRIFT_WEIGHT if i == 0 else 1 for i in self.entries)

    def __len__(self):
        return len(self.entries)

    def extend(self, index: int) -> "MultiIndex":
        return MultiIndex(self.entries + (index,))

    def __str__(self):
        return "(" + ",".join(str(i) for i in self.entries) + ")"

    def to_list(self) -> List[int]:
        return list(self.entries)


def lie_bracket(x: VectorField, y: VectorField) -> VectorField:
    """[X, Y] with coefficient i equal to Σ_j X_j ∂_j Y_i − Y_j ∂_j X_i."""
    if x.context != y.context or x.n != y.n:
        raise PolynomialContextError("Cannot bracket fields of different contexts")
    return VectorField(
        tuple(x.apply(y.coeffs[i]) - y.apply(x.coeffs[i]) for i in range(x.n)),
    )


def nested_bracket(spec: SystemSpec, index: MultiIndex) -> VectorField:
    """The left-nested bracket [[[X_i1, X_i2], X_i3], ..., X_ik]."""
    for i in index.entries:
        if i > spec.m or (i == 0 and spec.drift is None):
            raise InvalidMultiIndexError(
                f"Entry {i} of {index} is not a field index of this system",
            )
    result = spec.generator(index.entries[0])
    for i in index.entries[1:]:
        result = lie_bracket(result, spec.generator(i))
    if not result.is_zero():
        degree, _ = field_degree(result, spec.sigma)
        if degree != index.weight:
            raise HomogeneityViolationError(
                f"X_{index} has degree {degree}, expected {index.weight}",
            )
    return result


@dataclass(frozen=True)
class LieBasis:
    sigma: Tuple[int, ...]
    elements: Tuple[Tuple[MultiIndex, VectorField], ...]
    step: int

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def N(self) -> int:
        return len(self.elements)

    @property
    def q(self) -> int:
        return sum(self.sigma)

    @property
    def p(self) -> int:
        return self.N - self.n

    @property
    def indices(self) -> List[MultiIndex]:
        return [index for index, _ in self.elements]

    @property
    def fields(self) -> List[VectorField]:
        return [f for _, f in self.elements]

    @property
    def weights(self) -> List[int]:
        return [index.weight for index, _ in self.elements]

    def layer(self, weight: int) -> List[Tuple[MultiIndex, VectorField]]:
        return [(i, f) for i, f in self.elements if i.weight == weight]


def lie_basis(spec: SystemSpec) -> LieBasis:
    """
    Breadth-first closure of left-nested brackets by weight, up to σ_n.

    Fields of different δ-degree are independent, so independence is decided
    layer by layer over the monomial coefficients of each weight.
    """
    top = spec.sigma[-1]
    layers: Dict[int, List[Tuple[MultiIndex, VectorField]]] = {}

    def add_candidates(weight, candidates):
        chosen = layers.setdefault(weight, [])
        for index, candidate in candidates:
            if candidate.is_zero():
                continue
            trial = [f for _, f in chosen] + [candidate]
            if linalg.rank(coefficient_vectors(trial)) == len(trial):
                chosen.append((index, candidate))

    generators = range(1, spec.m + 1)
    add_candidates(1, [(MultiIndex((i,)), spec.generator(i)) for i in generators])
    for weight in range(2, top + 1):
        candidates = []
        if spec.drift is not None and weight == DRIFT_WEIGHT:
            candidates.append((MultiIndex((0,)), spec.drift))
        for index, element in layers.get(weight - 1, []):
            for i in range(1, spec.m + 1):
                candidates.append(
                    (index.extend(i), lie_bracket(element, spec.generator(i))),
                )
        if spec.drift is not None:
            for index, element in layers.get(weight - DRIFT_WEIGHT, []):
                candidates.append(
                    (index.extend(0), lie_bracket(element, spec.drift)),
                )
        add_candidates(weight, candidates)

    elements = tuple(e for w in sorted(layers) for e in layers[w])
    step = max((i.weight for i, _ in elements), default=0)
    basis = LieBasis(sigma=spec.sigma, elements=elements, step=step)
    logger.debug(
        f"Lie basis with N={basis.N}, step={basis.step}: "
        + ", ".join(str(i) for i in basis.indices),
    )
    return basis


def _exact(value):
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    return Fraction(value).limit_denominator(10**12)


def hormander_rank(spec: SystemSpec, basis: LieBasis, point: Sequence) -> int:
    if len(point) != spec.n:
        raise PolynomialContextError(f"Point of arity {len(point)} for n={spec.n}")
    point = [_exact(v) for v in point]
    rows = [list(f.evaluate(point)) for f in basis.fields]
    return linalg.rank(rows)


def random_rational_points(n: int, count: int, seed: int = 0, bound: int = 10):
    rng = random.Random(seed)
    return [
        tuple(Fraction(rng.randint(-bound * 8, bound * 8), 8) for _ in range(n))
        for _ in range(count)
    ]
